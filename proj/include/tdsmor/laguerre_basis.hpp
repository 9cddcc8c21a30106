#pragma once

#include <Eigen/Dense>

namespace tdsmor {

/// L_i(k) for a single index, evaluated by the three-term recurrence.
double laguerre_eval(int i, long k, double s);

/// [L_0(k), ..., L_{K-1}(k)].
Eigen::VectorXd laguerre_values(int K, long k, double s);

/// Lower-triangular Toeplitz matrix T with T L(k) = L(k+1).
Eigen::MatrixXd build_shift_matrix(int K, double s);

/// T^{-d} by d triangular solves against the identity.
Eigen::MatrixXd inverse_shift_powers(const Eigen::MatrixXd& shift, int d);

/// T^d, d >= 0.
Eigen::MatrixXd shift_powers(const Eigen::MatrixXd& shift, int d);

/// Discrete Laguerre functions of K terms with discount factor s.
class LaguerreBasis {
 public:
  LaguerreBasis(int K, double s);

  int size() const { return K_; }
  double discount() const { return s_; }
  /// sqrt(s)
  double root() const { return root_; }
  const Eigen::MatrixXd& shift_matrix() const { return shift_; }

  Eigen::VectorXd vector(long k) const { return laguerre_values(K_, k, s_); }

  /// Samples L(0..horizon) as the columns of a K x (horizon+1) matrix.
  Eigen::MatrixXd samples(long horizon) const;

 private:
  int K_;
  double s_;
  double root_;
  Eigen::MatrixXd shift_;
};

/// Smallest horizon H past which sum_{k>H} L_i(k)^2 <= eps for every i < K.
///
/// Walks beyond the polynomial peak (k >= 2K/(1-sqrt s)) and then until the
/// geometric tail bound max_i L_i(k)^2 / (1 - s) drops below eps.
long orthonormality_horizon(int K, double s, double eps);

}  // namespace tdsmor
