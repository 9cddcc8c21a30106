#include "tdsmor/walsh_basis.hpp"

#include <string>

#include "tdsmor/errors.hpp"

namespace tdsmor {

namespace {

int bit(int value, int position) { return position < 0 ? 0 : (value >> position) & 1; }

double g_summation_fault = 0.0;

}  // namespace

namespace fault {

void set_summation_perturbation(double delta) { g_summation_fault = delta; }
double summation_perturbation() { return g_summation_fault; }

bool available() {
#ifdef TDSMOR_FAULT_INJECTION
  return true;
#else
  return false;
#endif
}

}  // namespace fault

int walsh_function(int i, int k, int l) {
  if (l < 1 || l > 30) throw ArgumentError("walsh_function: log2 order out of range");
  const int n = 1 << l;
  if (i < 0 || i >= n || k < 0 || k >= n) {
    throw ArgumentError("walsh_function: index out of range for N = " + std::to_string(n));
  }
  int exponent = 0;
  for (int j = 0; j < l; ++j) {
    // g_j(i) = i_{l-1-j} + i_{l-j}, with i_l = 0.
    const int g = bit(i, l - 1 - j) + bit(i, l - j);
    exponent += g * bit(k, j);
  }
  return (exponent & 1) ? -1 : 1;
}

WalshBasis::WalshBasis(int l) : l_(l), n_(0) {
  if (l < 1) throw ArgumentError("WalshBasis: log2 order must be >= 1");
  if (l > kMaxWalshLog2) {
    throw CapacityError("WalshBasis: log2 order " + std::to_string(l) + " exceeds cap " +
                        std::to_string(kMaxWalshLog2));
  }
  n_ = 1 << l;
  walsh_.resize(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k < n_; ++k) walsh_(i, k) = walsh_function(i, k, l);

  const Eigen::MatrixXd w = walsh_.cast<double>();
  const double inv_n = 1.0 / n_;

  // R = (1/N) [W(N-1) W(0) ... W(N-2)] W
  Eigen::MatrixXd rotated(n_, n_);
  rotated.col(0) = w.col(n_ - 1);
  rotated.rightCols(n_ - 1) = w.leftCols(n_ - 1);
  shift_ = inv_n * rotated * w;

  // S = (1/N) [W(0), W(0)+W(1), ...] W, i.e. s_ij = (1/N) sum_k sum_{l<=k} W_i(l) W_j(k)
  Eigen::MatrixXd running(n_, n_);
  running.col(0) = w.col(0);
  for (int k = 1; k < n_; ++k) running.col(k) = running.col(k - 1) + w.col(k);
  summation_ = inv_n * running * w;
#ifdef TDSMOR_FAULT_INJECTION
  summation_(0, 0) += g_summation_fault;
#endif
}

Eigen::VectorXd WalshBasis::walsh_vector(int k) const {
  if (k < 0 || k >= n_) throw ArgumentError("walsh_vector: index out of range");
  return walsh_.col(k).cast<double>();
}

Eigen::MatrixXd WalshBasis::delayed_summation(int lag) const {
  if (lag < 0) throw ArgumentError("delayed_summation: lag must be non-negative");
  const Eigen::MatrixXd w = walsh_.cast<double>();
  Eigen::MatrixXd running = Eigen::MatrixXd::Zero(n_, n_);
  for (int k = lag; k < n_; ++k) {
    running.col(k) = w.col(k - lag);
    if (k > lag) running.col(k) += running.col(k - 1);
  }
  return running * w / static_cast<double>(n_);
}

Eigen::RowVectorXd WalshBasis::step_coefficients(int start) const {
  if (start < 0 || start >= n_) throw ArgumentError("step_coefficients: start out of range");
  Eigen::RowVectorXd indicator = Eigen::RowVectorXd::Zero(n_);
  indicator.tail(n_ - start).setOnes();
  return indicator * walsh_.cast<double>() / static_cast<double>(n_);
}

Eigen::MatrixXd WalshBasis::shift_power(int power) const {
  if (power < 0) throw ArgumentError("shift_power: negative power");
  power %= n_;
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n_, n_);
  for (int p = 0; p < power; ++p) result = shift_ * result;
  return result;
}

Eigen::MatrixXd WalshBasis::project(const Eigen::MatrixXd& samples) const {
  if (samples.cols() != n_) {
    throw ArgumentError("walsh_project: expected " + std::to_string(n_) + " samples, got " +
                        std::to_string(samples.cols()));
  }
  return samples * walsh_.cast<double>() / static_cast<double>(n_);
}

Eigen::VectorXd WalshBasis::reconstruct(const Eigen::MatrixXd& coefficients, int k) const {
  if (coefficients.cols() != n_) throw ArgumentError("walsh_reconstruct: coefficient width != N");
  return coefficients * walsh_vector(k);
}

Eigen::MatrixXd walsh_project(const WalshBasis& basis, const Eigen::MatrixXd& samples) {
  return basis.project(samples);
}

Eigen::VectorXd walsh_reconstruct(const WalshBasis& basis, const Eigen::MatrixXd& coefficients,
                                  int k) {
  return basis.reconstruct(coefficients, k);
}

}  // namespace tdsmor
