#include <doctest.h>

#include "oracles.hpp"
#include "tdsmor/benchmarks.hpp"
#include "tdsmor/errors.hpp"
#include "tdsmor/experiment.hpp"
#include "tdsmor/mor_walsh.hpp"

using namespace tdsmor;

namespace {

DelaySystem scalar_system() {
  return DelaySystem(Eigen::MatrixXd::Constant(1, 1, 0.5), {{Eigen::MatrixXd::Constant(1, 1, 0.1), 1}},
                     Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1));
}

Eigen::MatrixXd projected_states(const DelaySystem& sys, const InitialData& init, const InputSignal& u,
                                 const WalshBasis& basis) {
  const Eigen::MatrixXd x = oracle::states(sys, init, u, basis.order());
  return basis.project(x.rightCols(basis.order()));
}

}  // namespace

TEST_CASE("homogeneous problem has the zero solution") {
  const Benchmark b = gen_random_stable({4, {1}, 2, 0.1, 1, 1});
  const WalshBasis basis(3);
  const WalshSolution sol =
      solve_walsh_coefficients(b.system, InitialData::zero(4, 1), basis, Eigen::MatrixXd::Zero(1, 8));
  CHECK(sol.coefficients.norm() == 0.0);
}

TEST_CASE("scalar coefficients reproduce the trajectory") {
  const DelaySystem sys = scalar_system();
  const InitialData init({Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1)});
  const WalshBasis basis(2);
  const InputSignal u = InputSignal::zero(1);
  const WalshSolution sol = solve_walsh_coefficients(sys, init, basis, input_walsh_coefficients(u, basis));
  const double expected[] = {0.5, 0.35, 0.225, 0.5 * 0.225 + 0.1 * 0.35};
  for (int i = 0; i < 4; ++i) CHECK(basis.reconstruct(sol.coefficients, i)(0) == doctest::Approx(expected[i]).epsilon(1e-12));
  CHECK(sol.route == "dense");
}

TEST_CASE("multiple delays and every solver route") {
  const Benchmark b = gen_random_stable({5, {1, 2}, 8, 0.1, 1, 1});
  const WalshBasis basis(3);
  const InputSignal u = parse_input("ramp-sine 0.4 0.3", 1);
  const Eigen::MatrixXd uc = input_walsh_coefficients(u, basis);
  const Eigen::MatrixXd oracle_x = projected_states(b.system, b.init, u, basis);
  for (WalshRoute route : {WalshRoute::dense, WalshRoute::iterative}) {
    WalshSolveOptions opts;
    opts.route = route;
    const WalshSolution sol = solve_walsh_coefficients(b.system, b.init, basis, uc, opts);
    CHECK((sol.coefficients - oracle_x).norm() <= 1e-10 * oracle_x.norm());
    CHECK(sol.residual <= sol.residual_bound);
  }
}

TEST_CASE("vec operator agrees with the matrix form") {
  const Benchmark b = gen_random_stable({3, {1, 3}, 4, 0.1, 1, 1});
  const WalshBasis basis(3);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 8);
  for (WalshEquation eq : {WalshEquation::pointwise, WalshEquation::terminal}) {
    WalshSolveOptions opts;
    opts.equation = eq;
    const Eigen::MatrixXd op = walsh_vec_operator(b.system, basis, opts);
    const Eigen::VectorXd vx = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
    const Eigen::MatrixXd applied = walsh_operator_apply(b.system, basis, x, opts);
    CHECK((op * vx - Eigen::Map<const Eigen::VectorXd>(applied.data(), applied.size())).norm() <= 1e-12);
  }
}

TEST_CASE("terminal equation routes and cyclic powers") {
  const Benchmark b = gen_random_stable({4, {1, 2}, 12, 0.2, 1, 1});
  const WalshBasis basis(3);
  const Eigen::MatrixXd uc = input_walsh_coefficients(parse_input("exp -0.2", 1), basis);
  WalshSolveOptions dense;
  dense.equation = WalshEquation::terminal;
  dense.route = WalshRoute::dense;
  const WalshSolution a = solve_walsh_coefficients(b.system, b.init, basis, uc, dense);
  WalshSolveOptions iterative = dense;
  iterative.route = WalshRoute::iterative;
  const WalshSolution c = solve_walsh_coefficients(b.system, b.init, basis, uc, iterative);
  CHECK(c.route == "gmres");
  CHECK((a.coefficients - c.coefficients).norm() <= 1e-8 * a.coefficients.norm());
  WalshSolveOptions cyclic = dense;
  cyclic.reduce_cyclic_powers = true;
  const WalshSolution d = solve_walsh_coefficients(b.system, b.init, basis, uc, cyclic);
  CHECK((a.coefficients - d.coefficients).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("orders and preconditions") {
  const Benchmark b = gen_random_stable({3, {4}, 1, 0.1, 1, 1});
  CHECK_THROWS_AS(solve_walsh_coefficients(b.system, b.init, WalshBasis(2), Eigen::MatrixXd::Zero(1, 4)),
                  ArgumentError);
  CHECK_THROWS_AS(walsh_log2(12), ArgumentError);
  CHECK(walsh_log2(16) == 4);
  CHECK(parse_equation("terminal") == WalshEquation::terminal);
  CHECK_THROWS_AS(parse_equation("implicit"), ArgumentError);
}

TEST_CASE("projection basis") {
  const int n = 6;
  std::vector<Eigen::VectorXd> history{Eigen::VectorXd::Unit(n, 0), Eigen::VectorXd::Zero(n)};
  const OrthonormalBasis single = build_projection(Eigen::MatrixXd::Zero(n, 4), InitialData(history));
  CHECK(single.basis.cols() == 1);
  CHECK(std::abs(single.basis(0, 0)) == doctest::Approx(1.0));

  Eigen::MatrixXd x = Eigen::MatrixXd::Random(n, 3);
  Eigen::MatrixXd dup(n, 6);
  dup << x, x;
  std::vector<Eigen::VectorXd> in_span{x * Eigen::Vector3d(1, -2, 0.5), x.col(1)};
  const OrthonormalBasis collapsed = build_projection(dup, InitialData(in_span));
  CHECK(collapsed.basis.cols() == 3);
  CHECK((collapsed.basis.transpose() * collapsed.basis - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-12);
  for (const auto& phi : in_span) {
    CHECK((phi - collapsed.basis * (collapsed.basis.transpose() * phi)).norm() <= 1e-12 * phi.norm());
  }
}

TEST_CASE("full order reduction reproduces outputs") {
  const Benchmark b = gen_random_stable({6, {1}, 3, 0.1, 1, 1});
  const InputSignal u = parse_input("ramp-sine 1 0.2", 1);
  WalshReduceOptions opts;
  opts.check_stability = false;
  const ReducedSystem red = reduce_walsh(b.system, b.init, u, 8, opts);
  CHECK(red.order() == 6);
  CHECK((simulate(red.system, red.init, u, 300).outputs - simulate(b.system, b.init, u, 300).outputs)
            .cwiseAbs()
            .maxCoeff() <= 1e-10);
  CHECK(verify_coefficient_matching(b.system, b.init, red, u, 8) <= 1e-12);
}

TEST_CASE("truncated reduction matches output coefficients and lifts the reduced solution") {
  for (std::uint64_t seed = 100; seed < 105; ++seed) {
    const Benchmark b = gen_random_stable({30, {2}, seed, 0.1, 1, 1});
    const InputSignal u = parse_input("ramp-sine 0.5 0.2", 1);
    const WalshBasis basis(3);
    const ReducedSystem red = reduce_walsh(b.system, b.init, u, 8);
    CHECK(red.order() <= 8 + 2 + 1);
    CHECK(red.order() < 30);
    CHECK((red.v.transpose() * red.v - Eigen::MatrixXd::Identity(red.order(), red.order())).norm() <= 1e-10);
    const Eigen::MatrixXd y = basis.project(simulate(b.system, b.init, u, 7).outputs);
    CHECK(verify_coefficient_matching(b.system, b.init, red, u, 8) <= 1e-8 * y.norm());
    const Eigen::MatrixXd uc = input_walsh_coefficients(u, basis);
    const Eigen::MatrixXd full = solve_walsh_coefficients(b.system, b.init, basis, uc).coefficients;
    const Eigen::MatrixXd reduced = solve_walsh_coefficients(red.system, red.init, basis, uc).coefficients;
    CHECK((full - red.v * reduced).norm() <= 1e-8 * full.norm());
    for (int j = 0; j >= -2; --j) {
      CHECK((b.init.at(j) - red.v * red.init.at(j)).norm() <= 1e-8 * b.init.at(j).norm());
    }
    // Output coefficients from the equation equal the projected simulation.
    const Eigen::MatrixXd y_eq =
        output_walsh_coefficients(b.system, b.init, basis, full, WalshEquation::pointwise);
    CHECK((y_eq - y).norm() <= 1e-10 * y.norm());
  }
}

TEST_CASE("terminal equation keeps the reduced solution in span") {
  const Benchmark b = gen_random_stable({20, {1, 2}, 77, 0.1, 1, 1});
  const InputSignal u = parse_input("exp -0.2", 1);
  WalshReduceOptions opts;
  opts.solve.equation = WalshEquation::terminal;
  const ReducedSystem red = reduce_walsh(b.system, b.init, u, 8, opts);
  const WalshBasis basis(3);
  const Eigen::MatrixXd uc = input_walsh_coefficients(u, basis);
  const Eigen::MatrixXd full = solve_walsh_coefficients(b.system, b.init, basis, uc, opts.solve).coefficients;
  const Eigen::MatrixXd reduced =
      solve_walsh_coefficients(red.system, red.init, basis, uc, opts.solve).coefficients;
  CHECK((full - red.v * reduced).norm() <= 1e-8 * full.norm());
  const Eigen::MatrixXd y = output_walsh_coefficients(b.system, b.init, basis, full, WalshEquation::terminal);
  const Eigen::MatrixXd yr =
      output_walsh_coefficients(red.system, red.init, basis, reduced, WalshEquation::terminal);
  CHECK((y - yr).norm() <= 1e-8 * y.norm());
}

TEST_CASE("mismatched input breaks coefficient matching") {
  const Benchmark b = gen_random_stable({30, {2}, 5, 0.1, 1, 1});
  const ReducedSystem red = reduce_walsh(b.system, b.init, parse_input("ramp-sine 0.5 0.2", 1), 8);
  CHECK(verify_coefficient_matching(b.system, b.init, red, parse_input("exp 0.1", 1), 8) > 1e-4);
}

TEST_CASE("lifted comparator") {
  const Benchmark b = gen_random_stable({6, {1, 2}, 6, 0.1, 1, 1});
  const InputSignal u = parse_input("exp -0.1", 1);
  const ReducedSystem red = reduce_lifted_walsh(b.system, b.init, u, 8);
  CHECK(red.method == Method::lifted_walsh);
  CHECK(red.system.delayed().size() == 2);
  LiftedWalshOptions capped;
  capped.lifted_cap = 10;
  CHECK_THROWS_AS(reduce_lifted_walsh(b.system, b.init, u, 8, capped), CapacityError);
}
