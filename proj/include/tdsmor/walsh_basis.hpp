#pragma once

#include <Eigen/Dense>

namespace tdsmor {

/// Largest supported log2 order (N = 16384).
inline constexpr int kMaxWalshLog2 = 14;

/// Value of the i-th discrete Walsh function at point k, N = 2^l points.
///
/// Uses the recoded exponent sum_j g_j(i) k_j with g_0(i) = i_{l-1} and
/// g_j(i) = i_{l-j} + i_{l-1-j}, which yields a sequency-type ordering
/// (not the natural Hadamard ordering).
int walsh_function(int i, int k, int l);

/// Discrete Walsh functions of order N = 2^l with their operational matrices.
///
/// The Walsh matrix holds W(k) in column k and is symmetric with W*W = N*I.
/// The shift matrix R satisfies R W(k+1) = W(k) and R W(0) = W(N-1);
/// the summation matrix S satisfies S W(k) = sum_{i<=k} W(i).
class WalshBasis {
 public:
  explicit WalshBasis(int l);

  int log2_order() const { return l_; }
  int order() const { return n_; }

  const Eigen::MatrixXi& walsh_matrix() const { return walsh_; }
  const Eigen::MatrixXd& shift_matrix() const { return shift_; }
  const Eigen::MatrixXd& summation_matrix() const { return summation_; }

  /// Column k of the Walsh matrix as a real vector.
  Eigen::VectorXd walsh_vector(int k) const;

  /// S_lag with S_lag W(k) = sum_{i <= k - lag} W(i) (empty sums are zero).
  /// S_0 is the summation matrix; S_1 = S - I.
  Eigen::MatrixXd delayed_summation(int lag) const;

  /// Row vector c with c W(k) = 1 for k >= start and 0 otherwise.
  Eigen::RowVectorXd step_coefficients(int start) const;

  /// R^power for any integer power >= 0 (R is a cyclic shift, R^N = I).
  Eigen::MatrixXd shift_power(int power) const;

  /// Walsh coefficient matrix Z (q x N) of N samples stored column-wise (q x N).
  Eigen::MatrixXd project(const Eigen::MatrixXd& samples) const;

  /// Z W(k).
  Eigen::VectorXd reconstruct(const Eigen::MatrixXd& coefficients, int k) const;

 private:
  int l_;
  int n_;
  Eigen::MatrixXi walsh_;
  Eigen::MatrixXd shift_;
  Eigen::MatrixXd summation_;
};

Eigen::MatrixXd walsh_project(const WalshBasis& basis, const Eigen::MatrixXd& samples);
Eigen::VectorXd walsh_reconstruct(const WalshBasis& basis, const Eigen::MatrixXd& coefficients,
                                  int k);

namespace fault {
/// Adds delta to entry (0, 0) of the summation matrix of every WalshBasis built afterwards.
/// Only effective in builds with TDSMOR_FAULT_INJECTION.
void set_summation_perturbation(double delta);
double summation_perturbation();
bool available();
}  // namespace fault

}  // namespace tdsmor
