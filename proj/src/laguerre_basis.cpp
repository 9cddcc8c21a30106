#include "tdsmor/laguerre_basis.hpp"

#include <cmath>
#include <string>

#include "tdsmor/errors.hpp"

namespace tdsmor {

namespace {

void check_discount(double s) {
  if (!(s > 0.0 && s < 1.0)) {
    throw ArgumentError("discount factor must lie in (0, 1), got " + std::to_string(s));
  }
}

}  // namespace

Eigen::VectorXd laguerre_values(int K, long k, double s) {
  check_discount(s);
  if (K < 1) throw ArgumentError("laguerre: K must be >= 1");
  if (k < 0) throw ArgumentError("laguerre: time index must be >= 0");
  const double o = std::sqrt(s);
  const double kd = static_cast<double>(k);
  Eigen::VectorXd values(K);
  // Below k (1 + o) / (1 - o) < i the recurrence in i runs against its minimal solution, so
  // small k steps through the all-pass filter in time instead.
  if (kd * (1.0 + o) < (K - 1) * (1.0 - o)) {
    values(0) = std::sqrt(1.0 - s);
    for (int i = 1; i < K; ++i) values(i) = -o * values(i - 1);
    Eigen::VectorXd next(K);
    for (long t = 0; t < k; ++t) {
      next(0) = o * values(0);
      for (int i = 1; i < K; ++i) next(i) = o * values(i) + values(i - 1) - o * next(i - 1);
      values.swap(next);
    }
    return values;
  }
  // o^k underflows gracefully to zero for huge k.
  values(0) = std::sqrt(1.0 - s) * std::pow(o, kd);
  if (K == 1) return values;
  values(1) = -std::sqrt((1.0 - s) / s) * std::pow(o, kd) * (s + (s - 1.0) * kd);
  for (int i = 1; i + 1 < K; ++i) {
    const double a = (i + (i + 1) * s + (s - 1.0) * kd) / (i + 1);
    const double b = -static_cast<double>(i) * s / (i + 1);
    values(i + 1) = -a / o * values(i) + b / s * values(i - 1);
  }
  return values;
}

double laguerre_eval(int i, long k, double s) {
  if (i < 0) throw ArgumentError("laguerre_eval: index must be >= 0");
  return laguerre_values(i + 1, k, s)(i);
}

Eigen::MatrixXd build_shift_matrix(int K, double s) {
  check_discount(s);
  if (K < 1) throw ArgumentError("build_shift_matrix: K must be >= 1");
  const double o = std::sqrt(s);
  Eigen::VectorXd first(K);
  first(0) = o;
  double term = 1.0 - s;
  for (int r = 1; r < K; ++r) {
    first(r) = term;
    term *= -o;
  }
  Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(K, K);
  for (int c = 0; c < K; ++c) shift.col(c).tail(K - c) = first.head(K - c);
  return shift;
}

Eigen::MatrixXd inverse_shift_powers(const Eigen::MatrixXd& shift, int d) {
  if (d < 1) throw ArgumentError("inverse_shift_powers: d must be >= 1");
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(shift.rows(), shift.cols());
  const auto lower = shift.triangularView<Eigen::Lower>();
  for (int p = 0; p < d; ++p) lower.solveInPlace(result);
  return result;
}

Eigen::MatrixXd shift_powers(const Eigen::MatrixXd& shift, int d) {
  if (d < 0) throw ArgumentError("shift_powers: d must be >= 0");
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(shift.rows(), shift.cols());
  for (int p = 0; p < d; ++p) result = shift * result;
  return result;
}

LaguerreBasis::LaguerreBasis(int K, double s)
    : K_(K), s_(s), root_(std::sqrt(s)), shift_(build_shift_matrix(K, s)) {}

Eigen::MatrixXd LaguerreBasis::samples(long horizon) const {
  if (horizon < 0) throw ArgumentError("LaguerreBasis::samples: negative horizon");
  Eigen::MatrixXd out(K_, horizon + 1);
  for (long k = 0; k <= horizon; ++k) out.col(k) = vector(k);
  return out;
}

long orthonormality_horizon(int K, double s, double eps) {
  check_discount(s);
  if (!(eps > 0.0)) throw ArgumentError("orthonormality_horizon: eps must be positive");
  const double o = std::sqrt(s);
  long k = static_cast<long>(std::ceil(2.0 * K / (1.0 - o)));
  for (;; k += 8) {
    const double peak = laguerre_values(K, k, s).cwiseAbs().maxCoeff();
    if (peak * peak / (1.0 - s) <= eps) return k;
    if (k > 100000000L) throw NumericalError("orthonormality_horizon: no horizon found");
  }
}

}  // namespace tdsmor
