#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "tdsmor/delay_system.hpp"
#include "tdsmor/linalg.hpp"
#include "tdsmor/walsh_basis.hpp"

namespace tdsmor {

/// Which Walsh-domain matrix equation defines the state coefficients.
///
/// pointwise: X S = A0 (phi(0) c_0 + X S_1) + sum_l A_l (sum_{i<=d_l} phi(i-d_l) c_i + X S_{d_l+1}) + B U S,
///   where c_i are the step coefficients of 1[k >= i] and S_j the delayed summation matrices.
///   Its solution is exactly the coefficient matrix of x(1..N).
/// terminal: the single-identity form
///   X S = A0 Q0 + A0 X R S - A0 X + sum_l A_l (sum_i Q_{i-d_l} + X R^{d_l+1} S - sum_i X R^{N+d_l-i}).
enum class WalshEquation { pointwise, terminal };

std::string equation_name(WalshEquation equation);
WalshEquation parse_equation(const std::string& name);

enum class WalshRoute { automatic, dense, iterative };

struct WalshSolveOptions {
  WalshEquation equation = WalshEquation::pointwise;
  WalshRoute route = WalshRoute::automatic;
  /// Largest nN handled by the dense vec factorization in automatic mode.
  long dense_limit = 4096;
  double residual_tol = 1e-8;
  /// Reciprocal condition estimate below which the dense operator counts as singular.
  double min_rcond = 1e-14;
  /// Terminal form: use R^{d-i} in place of R^{N+d-i}.
  bool reduce_cyclic_powers = false;
  int gmres_restart = 50;
  int gmres_max_iterations = 2000;
};

struct WalshSolution {
  /// n x N; x(k+1) = coefficients * W(k).
  Eigen::MatrixXd coefficients;
  double residual = 0.0;
  double residual_bound = 0.0;
  /// "dense", "structured" or "gmres".
  std::string route;
  /// Dense route only.
  std::optional<double> rcond;
  int iterations = 0;
};

/// U = walsh_project of u(0..N-1).
Eigen::MatrixXd input_walsh_coefficients(const InputSignal& input, const WalshBasis& basis);

/// Q_j: phi(j) in column 0, zeros elsewhere.
Eigen::MatrixXd initial_walsh_coefficients(const InitialData& init, int j, const WalshBasis& basis);

/// Left-hand operator applied to X.
Eigen::MatrixXd walsh_operator_apply(const DelaySystem& system, const WalshBasis& basis,
                                     const Eigen::MatrixXd& coefficients,
                                     const WalshSolveOptions& options = {});

/// Right-hand side of the chosen equation.
Eigen::MatrixXd walsh_rhs(const DelaySystem& system, const InitialData& init,
                          const WalshBasis& basis, const Eigen::MatrixXd& input_coefficients,
                          const WalshSolveOptions& options = {});

/// Dense nN x nN vec operator (Kronecker form).
Eigen::MatrixXd walsh_vec_operator(const DelaySystem& system, const WalshBasis& basis,
                                   const WalshSolveOptions& options = {});

/// Solves the Walsh matrix equation and enforces the residual contract.
WalshSolution solve_walsh_coefficients(const DelaySystem& system, const InitialData& init,
                                       const WalshBasis& basis,
                                       const Eigen::MatrixXd& input_coefficients,
                                       const WalshSolveOptions& options = {});

/// Output coefficients implied by the state coefficients through the equation's own output relation.
Eigen::MatrixXd output_walsh_coefficients(const DelaySystem& system, const InitialData& init,
                                          const WalshBasis& basis,
                                          const Eigen::MatrixXd& state_coefficients,
                                          WalshEquation equation);

/// Orthonormal basis of span{X, phi(0), ..., phi(-d_max)}.
OrthonormalBasis build_projection(const Eigen::MatrixXd& state_coefficients,
                                  const InitialData& init,
                                  std::optional<double> relative_tol = std::nullopt);

struct WalshReduceOptions {
  WalshSolveOptions solve;
  std::optional<double> rank_tol;
  bool check_stability = true;
};

/// log2 of a power of two N >= 2, else argument error.
int walsh_log2(int order);

ReducedSystem reduce_walsh(const DelaySystem& system, const InitialData& init,
                           const InputSignal& input, int order,
                           const WalshReduceOptions& options = {});

/// max_i |Y(:,i) - Ŷ(:,i)|_inf over the projected outputs y(0..N-1).
double verify_coefficient_matching(const DelaySystem& system, const InitialData& init,
                                   const ReducedSystem& reduced, const InputSignal& input,
                                   int order);

struct LiftedWalshOptions {
  WalshSolveOptions solve;
  std::optional<double> rank_tol;
  /// Largest n(d_max+1) for which the lifted matrix is formed.
  long lifted_cap = 4096;
};

/// Walsh reduction of the delay-free lifted system followed by block partitioning of V.
ReducedSystem reduce_lifted_walsh(const DelaySystem& system, const InitialData& init,
                                  const InputSignal& input, int order,
                                  const LiftedWalshOptions& options = {});

}  // namespace tdsmor
