#include "tdsmor/linalg.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <limits>
#include <sstream>

#include "tdsmor/errors.hpp"

namespace tdsmor {

double default_rank_tolerance(Eigen::Index rows, Eigen::Index cols) {
  return static_cast<double>(std::max<Eigen::Index>({rows, cols, 1})) *
         std::numeric_limits<double>::epsilon();
}

int numerical_rank(const Eigen::VectorXd& singular_values, double relative_tol) {
  if (singular_values.size() == 0 || singular_values(0) <= 0.0) return 0;
  const double cutoff = relative_tol * singular_values(0);
  int rank = 0;
  while (rank < singular_values.size() && singular_values(rank) > cutoff) ++rank;
  return rank;
}

ThinSvd thin_svd(const Eigen::MatrixXd& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Eigen::Index k = 0; k < out.u.cols(); ++k) {
    Eigen::Index where = 0;
    out.u.col(k).cwiseAbs().maxCoeff(&where);
    if (out.u(where, k) < 0.0) {
      out.u.col(k) = -out.u.col(k);
      out.v.col(k) = -out.v.col(k);
    }
  }
  return out;
}

OrthonormalBasis orthonormal_basis(const Eigen::MatrixXd& m, std::optional<double> relative_tol) {
  OrthonormalBasis out;
  out.tolerance = relative_tol.value_or(default_rank_tolerance(m.rows(), m.cols()));
  if (m.cols() == 0 || m.rows() == 0) {
    out.basis.resize(m.rows(), 0);
    return out;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) throw NumericalError("orthonormal_basis: SVD did not converge");
  out.singular_values = svd.singularValues();
  const int rank = numerical_rank(out.singular_values, out.tolerance);
  out.basis = svd.matrixU().leftCols(rank);
  const double tiny = 1e-14;
  for (int k = 0; k < rank; ++k) {
    for (Eigen::Index i = 0; i < out.basis.rows(); ++i) {
      if (std::abs(out.basis(i, k)) > tiny) {
        if (out.basis(i, k) < 0.0) out.basis.col(k) = -out.basis.col(k);
        break;
      }
    }
  }
  return out;
}

std::string format_spectrum(const Eigen::VectorXd& sigma, int limit) {
  std::ostringstream out;
  out.precision(6);
  const Eigen::Index shown = std::min<Eigen::Index>(sigma.size(), limit);
  for (Eigen::Index k = 0; k < shown; ++k) out << (k ? ", " : "") << sigma(k);
  if (shown < sigma.size()) out << ", ... (" << sigma.size() << " total)";
  return out.str();
}

}  // namespace tdsmor
