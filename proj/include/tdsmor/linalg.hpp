#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

namespace tdsmor {

/// max(rows, cols) * machine epsilon.
double default_rank_tolerance(Eigen::Index rows, Eigen::Index cols);

/// Number of singular values above relative_tol * sigma_max.
int numerical_rank(const Eigen::VectorXd& singular_values, double relative_tol);

struct ThinSvd {
  Eigen::MatrixXd u;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd v;
};

/// Thin SVD with each left singular vector's largest-magnitude entry made positive
/// (the matching right vector flips with it).
ThinSvd thin_svd(const Eigen::MatrixXd& m);

struct OrthonormalBasis {
  Eigen::MatrixXd basis;
  Eigen::VectorXd singular_values;
  double tolerance = 0.0;
};

/// Orthonormal basis of the column span, rank decided by relative_tol * sigma_max
/// (default: default_rank_tolerance). The first nonzero entry of each column is positive.
OrthonormalBasis orthonormal_basis(const Eigen::MatrixXd& m,
                                   std::optional<double> relative_tol = std::nullopt);

/// Comma-separated leading singular values for error messages.
std::string format_spectrum(const Eigen::VectorXd& sigma, int limit = 40);

}  // namespace tdsmor
