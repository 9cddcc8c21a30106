#include "tdsmor/benchmarks.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "tdsmor/errors.hpp"

namespace tdsmor {

namespace {

void assert_stable(const DelaySystem& system, const std::string& name) {
  const double rho = spectral_radius(system);
  if (!(rho < 1.0)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << name << ": generated system is not stable (spectral radius " << rho << ")";
    throw NumericalError(msg.str());
  }
}

Eigen::VectorXd unit(int n, int k) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e(k) = 1.0;
  return e;
}

}  // namespace

double NormalStream::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double NormalStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Benchmark gen_platoon(int n, double dt, bool verify_stability) {
  if (n < 5 || (n - 2) % 3 != 0) {
    throw ArgumentError("gen_platoon: n must be 3m + 2 with m >= 1 (got " + std::to_string(n) + ")");
  }
  if (!(dt > 0.0)) throw ArgumentError("gen_platoon: dt must be positive");
  const int followers = (n - 2) / 3;
  const int leader = 3 * followers;
  const double headway = 1.5;
  const double kp = 1.0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd ad = Eigen::MatrixXd::Zero(n, n);
  a(leader, leader + 1) = 1.0;
  a(leader + 1, leader + 1) = -2.0;
  a(leader + 1, leader) = -1.0;
  for (int i = 0; i < followers; ++i) {
    const double lag = 2.0 + 0.5 * std::sin(i + 1.0);
    const double kv = 2.0 + 0.25 * std::cos(i + 1.0);
    const int gap = 3 * i, vel = 3 * i + 1, acc = 3 * i + 2;
    const int ahead = i == 0 ? leader : 3 * (i - 1) + 1;
    a(gap, ahead) += 1.0;
    a(gap, vel) -= 1.0;
    a(gap, acc) -= headway;
    a(vel, acc) = 1.0;
    a(acc, acc) = -lag;
    ad(acc, gap) += kp;
    ad(acc, ahead) += kv;
    ad(acc, vel) -= kv;
  }
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, 1);
  b(n - 1, 0) = 0.05;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(1, n);
  for (int i = 0; i < followers; ++i) c(0, 3 * i) = 1.0;

  Benchmark bench;
  bench.name = "platoon";
  bench.system = DelaySystem(Eigen::MatrixXd::Identity(n, n) + dt * a, {{dt * ad, 1}}, b, c);
  bench.init = InitialData({c.row(0).transpose(), unit(n, 0)});
  if (verify_stability) assert_stable(bench.system, bench.name);
  return bench;
}

Benchmark gen_convdiff(int h, bool verify_stability) {
  if (h < 3) throw ArgumentError("gen_convdiff: h must be >= 3");
  const int n = h * h;
  const double dh = 1.0 / (h + 1);
  const double dt = 0.1 * dh * dh;
  const auto index = [h](int i, int j) { return j * h + i; };
  Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd convection = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd f1(n), f2(n);
  const double inv2 = 1.0 / (dh * dh);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < h; ++i) {
      const int k = index(i, j);
      laplacian(k, k) = -4.0 * inv2;
      if (i + 1 < h) laplacian(k, index(i + 1, j)) = inv2;
      if (i > 0) laplacian(k, index(i - 1, j)) = inv2;
      if (j + 1 < h) laplacian(k, index(i, j + 1)) = inv2;
      if (j > 0) laplacian(k, index(i, j - 1)) = inv2;
      convection(k, k) = -2.0 / dh;
      if (i + 1 < h) convection(k, index(i + 1, j)) = 1.0 / dh;
      if (j + 1 < h) convection(k, index(i, j + 1)) = 1.0 / dh;
      f1(k) = std::sin((i + 1) * dh * std::numbers::pi);
      f2(k) = std::cos((j + 1) * dh * std::numbers::pi);
    }
  }
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, 1);
  b(0, 0) = dt;
  Benchmark bench;
  bench.name = "convdiff";
  bench.system = DelaySystem(Eigen::MatrixXd::Identity(n, n) + dt * (laplacian + convection),
                             {{Eigen::MatrixXd(dt * f1.asDiagonal()), 1},
                              {Eigen::MatrixXd(dt * f2.asDiagonal()), 2}},
                             b, Eigen::MatrixXd::Ones(1, n));
  bench.init = InitialData({Eigen::VectorXd::Ones(n), unit(n, 0), unit(n, 1)});
  if (verify_stability) assert_stable(bench.system, bench.name);
  return bench;
}

Benchmark gen_rod(int n) {
  if (n < 10) throw ArgumentError("gen_rod: n must be >= 10");
  const double dx = 0.01 * std::numbers::pi / (n + 1);
  const double dt = 0.01 * dx * dx;
  Eigen::VectorXd x(n);
  for (int j = 0; j < n; ++j) x(j) = (j + 1) * dx;
  Eigen::MatrixXd a0 = Eigen::MatrixXd::Identity(n, n);
  for (int j = 0; j < n; ++j) {
    a0(j, j) += dt * (-2.0 / (dx * dx) + std::sin(x(j)));
    if (j > 0) a0(j, j - 1) = dt / (dx * dx);
    if (j + 1 < n) a0(j, j + 1) = dt / (dx * dx);
  }
  const Eigen::VectorXd a1 = dt * 1e4 * x.array().cos();
  const Eigen::VectorXd a2 = dt * 1e4 * x.array().sin();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, 2);
  const int half = n / 2;
  b.col(0).head(half).setConstant(dt);
  b.col(1).tail(n - half).setConstant(dt);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, n);
  c(0, static_cast<int>(std::lround(n / 3.0)) - 1) = 1.0;
  c(1, static_cast<int>(std::lround(2.0 * n / 3.0)) - 1) = 1.0;

  Benchmark bench;
  bench.name = "rod";
  bench.system = DelaySystem(std::move(a0),
                             {{Eigen::MatrixXd(a1.asDiagonal()), 2},
                              {Eigen::MatrixXd(a2.asDiagonal()), 4}},
                             std::move(b), std::move(c));
  std::vector<Eigen::VectorXd> history{unit(n, n - 1)};
  for (int j = 1; j <= 4; ++j) history.push_back(unit(n, j - 1));
  bench.init = InitialData(std::move(history));
  return bench;
}

Benchmark gen_random_stable(const RandomSpec& spec) {
  if (spec.n < 1) throw ArgumentError("gen_random_stable: n must be >= 1");
  if (!(spec.margin > 0.0 && spec.margin < 1.0)) {
    throw ArgumentError("gen_random_stable: margin must lie in (0, 1)");
  }
  if (spec.inputs < 0 || spec.outputs < 0) throw ArgumentError("gen_random_stable: negative m or p");
  NormalStream rng(spec.seed);
  const int n = spec.n;
  const auto gaussian = [&](int rows, int cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = scale * rng.normal();
    return m;
  };
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd a0 = gaussian(n, n, scale);
  std::vector<DelayTerm> delayed;
  for (int d : spec.delays) delayed.push_back({gaussian(n, n, 0.5 * scale), d});
  Eigen::MatrixXd b = gaussian(n, spec.inputs, 1.0);
  Eigen::MatrixXd c = gaussian(spec.outputs, n, 1.0);
  const int depth = spec.delays.empty() ? 0 : spec.delays.back();
  std::vector<Eigen::VectorXd> history;
  for (int j = 0; j <= depth; ++j) {
    Eigen::VectorXd v = gaussian(n, 1, 1.0);
    history.push_back(v / v.norm());
  }

  // Scaling A0 by c and A_l by c^{d_l+1} scales every lifted eigenvalue by c.
  DelaySystem raw(a0, delayed, b, c);
  const double rho = spectral_radius(raw);
  if (rho > 0.0) {
    const double factor = (1.0 - spec.margin) / rho * (1.0 - 1e-12);
    a0 *= factor;
    for (auto& term : delayed) term.matrix *= std::pow(factor, term.delay + 1);
  }
  Benchmark bench;
  bench.name = "random";
  bench.system = DelaySystem(std::move(a0), std::move(delayed), std::move(b), std::move(c));
  bench.init = InitialData(std::move(history));
  return bench;
}

}  // namespace tdsmor
