#include <doctest.h>

#include "oracles.hpp"
#include "tdsmor/errors.hpp"
#include "tdsmor/walsh_basis.hpp"

using namespace tdsmor;

TEST_CASE("walsh function matches the bit recoding") {
  CHECK(walsh_function(0, 3, 2) == 1);
  CHECK(walsh_function(1, 1, 1) == -1);
  for (int l = 1; l <= 5; ++l) {
    const int n = 1 << l;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) REQUIRE(walsh_function(i, k, l) == oracle::walsh_bits(i, k, l));
  }
  CHECK_THROWS_AS(walsh_function(4, 0, 2), ArgumentError);
  CHECK_THROWS_AS(walsh_function(0, -1, 2), ArgumentError);
}

TEST_CASE("orthogonality and involution are exact") {
  for (int l = 1; l <= 6; ++l) {
    const WalshBasis basis(l);
    const int n = basis.order();
    const Eigen::MatrixXi& w = basis.walsh_matrix();
    CHECK(w * w.transpose() == n * Eigen::MatrixXi::Identity(n, n));
    CHECK(w * w == n * Eigen::MatrixXi::Identity(n, n));
  }
}

TEST_CASE("order one matrices") {
  const WalshBasis basis(1);
  Eigen::Matrix2d r;
  r << 1, 0, 0, -1;
  Eigen::Matrix2d s;
  s << 1.5, -0.5, 0.5, 0.5;
  CHECK((basis.shift_matrix() - r).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((basis.summation_matrix() - s).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((basis.summation_matrix() * Eigen::Vector2d(1, -1) - Eigen::Vector2d(2, 0)).norm() <= 1e-15);
}

TEST_CASE("shift is a cyclic permutation and summation accumulates") {
  for (int l = 1; l <= 6; ++l) {
    const WalshBasis basis(l);
    const int n = basis.order();
    const Eigen::MatrixXd& r = basis.shift_matrix();
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < n; ++k) power = r * power;
    CHECK((power - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::VectorXd running = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < n; ++k) {
      CHECK((r * basis.walsh_vector((k + 1) % n) - basis.walsh_vector(k)).cwiseAbs().maxCoeff() <= 1e-12);
      running += basis.walsh_vector(k);
      CHECK((basis.summation_matrix() * basis.walsh_vector(k) - running).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("delayed summation and step coefficients") {
  const WalshBasis basis(4);
  const int n = basis.order();
  for (int lag = 0; lag < 4; ++lag) {
    const Eigen::MatrixXd sd = basis.delayed_summation(lag);
    Eigen::VectorXd running = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < n; ++k) {
      if (k >= lag) running += basis.walsh_vector(k - lag);
      CHECK((sd * basis.walsh_vector(k) - running).cwiseAbs().maxCoeff() <= 1e-12);
    }
    const Eigen::RowVectorXd c = basis.step_coefficients(lag);
    for (int k = 0; k < n; ++k) CHECK(c.dot(basis.walsh_vector(k)) == doctest::Approx(k >= lag ? 1.0 : 0.0));
  }
  CHECK((basis.delayed_summation(0) - basis.summation_matrix()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("projection is exact") {
  const WalshBasis basis(3);
  const int n = basis.order();
  Eigen::MatrixXd samples = Eigen::MatrixXd::Random(3, n) * 0.5;
  const Eigen::MatrixXd z = walsh_project(basis, samples);
  for (int k = 0; k < n; ++k) CHECK((walsh_reconstruct(basis, z, k) - samples.col(k)).norm() <= 1e-12);

  const Eigen::MatrixXd constant = Eigen::Vector3d(1, 2, 3).replicate(1, n);
  const Eigen::MatrixXd zc = basis.project(constant);
  CHECK((zc.col(0) - Eigen::Vector3d(1, 2, 3)).norm() <= 1e-15);
  CHECK(zc.rightCols(n - 1).norm() <= 1e-15);

  Eigen::MatrixXd single(1, n);
  for (int k = 0; k < n; ++k) single(0, k) = walsh_function(1, k, 3);
  const Eigen::MatrixXd z1 = basis.project(single);
  CHECK(z1(0, 1) == doctest::Approx(1.0));
  CHECK(z1.norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(basis.project(Eigen::MatrixXd::Zero(2, n - 1)), ArgumentError);
}

TEST_CASE("order limits") {
  CHECK_THROWS_AS(WalshBasis(0), ArgumentError);
  CHECK_THROWS_AS(WalshBasis(kMaxWalshLog2 + 1), CapacityError);
}
