#include "tdsmor/delay_system.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "tdsmor/errors.hpp"

namespace tdsmor {

namespace {

std::string dims(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

DelaySystem::DelaySystem(Eigen::MatrixXd a0, std::vector<DelayTerm> delayed, Eigen::MatrixXd b,
                         Eigen::MatrixXd c)
    : a0_(std::move(a0)), delayed_(std::move(delayed)), b_(std::move(b)), c_(std::move(c)) {
  const auto n = a0_.rows();
  if (a0_.cols() != n) throw ArgumentError("DelaySystem: A0 must be square, got " + dims(a0_));
  if (b_.rows() != n) throw ArgumentError("DelaySystem: B has " + dims(b_) + ", expected n rows");
  if (c_.cols() != n) throw ArgumentError("DelaySystem: C has " + dims(c_) + ", expected n cols");
  int previous = 0;
  for (const auto& term : delayed_) {
    if (term.matrix.rows() != n || term.matrix.cols() != n) {
      throw ArgumentError("DelaySystem: delayed matrix has " + dims(term.matrix));
    }
    if (term.delay <= previous) {
      throw ArgumentError("DelaySystem: delays must be >= 1 and strictly increasing");
    }
    previous = term.delay;
  }
}

DelaySystem DelaySystem::transposed() const {
  std::vector<DelayTerm> delayed;
  delayed.reserve(delayed_.size());
  for (const auto& term : delayed_) delayed.push_back({term.matrix.transpose(), term.delay});
  return DelaySystem(a0_.transpose(), std::move(delayed), c_.transpose(), b_.transpose());
}

InitialData::InitialData(std::vector<Eigen::VectorXd> history) : history_(std::move(history)) {
  if (history_.empty()) throw ArgumentError("InitialData: history must contain phi(0)");
  const auto n = history_[0].size();
  for (const auto& value : history_) {
    if (value.size() != n) throw ArgumentError("InitialData: inconsistent state dimensions");
  }
  for (const auto& value : history_) {
    const double norm = value.norm();
    if (norm == 0.0) {
      bases_.emplace_back(n, 0);
      weights_.emplace_back(0);
    } else {
      bases_.emplace_back(value / norm);
      weights_.push_back(Eigen::VectorXd::Constant(1, norm));
    }
  }
}

InitialData::InitialData(std::vector<Eigen::VectorXd> history, std::vector<Eigen::MatrixXd> bases)
    : history_(std::move(history)), bases_(std::move(bases)) {
  if (history_.empty()) throw ArgumentError("InitialData: history must contain phi(0)");
  if (bases_.size() != history_.size()) throw ArgumentError("InitialData: one basis per lag");
  const auto n = history_[0].size();
  for (std::size_t j = 0; j < history_.size(); ++j) {
    if (history_[j].size() != n || bases_[j].rows() != n) {
      throw ArgumentError("InitialData: inconsistent state dimensions");
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(bases_[j].cols());
    if (bases_[j].cols() > 0) {
      w = bases_[j].completeOrthogonalDecomposition().solve(history_[j]);
    }
    const double mismatch = (bases_[j] * w - history_[j]).norm();
    if (mismatch > 1e-12 * std::max(1.0, history_[j].norm())) {
      throw ArgumentError("InitialData: phi(-" + std::to_string(j) +
                          ") is not in the span of its basis");
    }
    weights_.push_back(std::move(w));
  }
}

InitialData InitialData::zero(int n, int max_lag) {
  return InitialData(std::vector<Eigen::VectorXd>(max_lag + 1, Eigen::VectorXd::Zero(n)));
}

const Eigen::VectorXd& InitialData::at(int j) const {
  if (j > 0 || -j > max_lag()) throw ArgumentError("InitialData: lag out of range");
  return history_[-j];
}

const Eigen::MatrixXd& InitialData::basis(int j) const {
  if (j > 0 || -j > max_lag()) throw ArgumentError("InitialData: lag out of range");
  return bases_[-j];
}

const Eigen::VectorXd& InitialData::weights(int j) const {
  if (j > 0 || -j > max_lag()) throw ArgumentError("InitialData: lag out of range");
  return weights_[-j];
}

bool InitialData::is_zero() const {
  return std::all_of(history_.begin(), history_.end(),
                     [](const Eigen::VectorXd& v) { return v.isZero(0.0); });
}

InputSignal::InputSignal(int channels, Generator generator, std::string description)
    : channels_(channels), generator_(std::move(generator)), description_(std::move(description)) {
  if (channels < 0) throw ArgumentError("InputSignal: negative channel count");
}

InputSignal InputSignal::zero(int channels) {
  return InputSignal(
      channels, [channels](long) { return Eigen::VectorXd::Zero(channels); }, "zero");
}

InputSignal InputSignal::sampled(Eigen::MatrixXd samples, std::string description) {
  const int channels = static_cast<int>(samples.rows());
  const long length = samples.cols();
  InputSignal signal(
      channels,
      [data = std::move(samples)](long t) -> Eigen::VectorXd {
        if (t < 0 || t >= data.cols()) {
          throw ArgumentError("InputSignal: sample index " + std::to_string(t) +
                              " beyond the stored " + std::to_string(data.cols()) + " samples");
        }
        return data.col(t);
      },
      std::move(description));
  signal.length_ = length;
  return signal;
}

Eigen::VectorXd InputSignal::operator()(long t) const {
  if (!generator_) throw ArgumentError("InputSignal: empty signal");
  Eigen::VectorXd value = generator_(t);
  if (value.size() != channels_) throw ArgumentError("InputSignal: generator returned wrong size");
  return value;
}

Eigen::MatrixXd InputSignal::samples(long count) const {
  Eigen::MatrixXd out(channels_, count);
  for (long t = 0; t < count; ++t) out.col(t) = (*this)(t);
  return out;
}

Trajectory simulate(const DelaySystem& system, const InitialData& init, const InputSignal& input,
                    long horizon, bool keep_states) {
  const int n = system.states();
  const int depth = system.max_delay();
  if (horizon < 1) throw ArgumentError("simulate: horizon must be >= 1");
  if (init.dimension() != n) throw ArgumentError("simulate: initial data dimension mismatch");
  if (init.max_lag() < depth) throw ArgumentError("simulate: initial data shorter than max delay");
  if (input.channels() != system.inputs()) throw ArgumentError("simulate: input channel mismatch");

  // ring[(t mod (depth+1))] holds x(t) for the last depth+1 steps.
  const int slots = depth + 1;
  auto slot = [slots](long t) { return static_cast<int>(((t % slots) + slots) % slots); };
  std::vector<Eigen::VectorXd> ring(slots);
  for (int j = 0; j <= depth; ++j) ring[slot(-j)] = init.at(-j);

  Trajectory traj;
  traj.input_description = input.description();
  traj.outputs.resize(system.outputs(), horizon + 1);
  if (keep_states) traj.states = Eigen::MatrixXd(n, horizon + 1);
  traj.outputs.col(0) = system.c() * ring[slot(0)];
  if (keep_states) traj.states->col(0) = ring[slot(0)];

  Eigen::VectorXd next(n);
  for (long t = 0; t < horizon; ++t) {
    next.noalias() = system.a0() * ring[slot(t)];
    for (const auto& term : system.delayed()) next.noalias() += term.matrix * ring[slot(t - term.delay)];
    if (system.inputs() > 0) next.noalias() += system.b() * input(t);
    ring[slot(t + 1)] = next;
    traj.outputs.col(t + 1) = system.c() * next;
    if (keep_states) traj.states->col(t + 1) = next;
  }
  return traj;
}

std::vector<Eigen::MatrixXd> fundamental_applied(const DelaySystem& system,
                                                 const Eigen::MatrixXd& m, long t_max) {
  if (t_max < 0) throw ArgumentError("fundamental_matrix: t_max must be >= 0");
  if (m.rows() != system.states()) throw ArgumentError("fundamental_applied: row mismatch");
  std::vector<Eigen::MatrixXd> psi;
  psi.reserve(t_max + 1);
  psi.push_back(m);
  for (long t = 0; t < t_max; ++t) {
    Eigen::MatrixXd next = system.a0() * psi[t];
    for (const auto& term : system.delayed()) {
      if (t - term.delay >= 0) next.noalias() += term.matrix * psi[t - term.delay];
    }
    psi.push_back(std::move(next));
  }
  return psi;
}

std::vector<Eigen::MatrixXd> fundamental_matrix(const DelaySystem& system, long t_max) {
  return fundamental_applied(system, Eigen::MatrixXd::Identity(system.states(), system.states()),
                             t_max);
}

LiftedSystem lift_to_linear(const DelaySystem& system) {
  const int n = system.states();
  const int blocks = system.max_delay() + 1;
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * blocks;
  LiftedSystem lifted;
  lifted.block_size = n;
  lifted.blocks = blocks;
  lifted.a = Eigen::MatrixXd::Zero(dim, dim);
  lifted.a.topLeftCorner(n, n) = system.a0();
  for (const auto& term : system.delayed()) {
    lifted.a.block(0, static_cast<Eigen::Index>(n) * term.delay, n, n) += term.matrix;
  }
  for (int k = 1; k < blocks; ++k) {
    lifted.a.block(static_cast<Eigen::Index>(n) * k, static_cast<Eigen::Index>(n) * (k - 1), n, n)
        .setIdentity();
  }
  lifted.b = Eigen::MatrixXd::Zero(dim, system.inputs());
  lifted.b.topRows(n) = system.b();
  lifted.c = Eigen::MatrixXd::Zero(system.outputs(), dim);
  lifted.c.leftCols(n) = system.c();
  return lifted;
}

Eigen::VectorXd stack_initial(const InitialData& init, int blocks) {
  if (init.max_lag() + 1 < blocks) throw ArgumentError("stack_initial: history too short");
  const int n = init.dimension();
  Eigen::VectorXd z(static_cast<Eigen::Index>(n) * blocks);
  for (int k = 0; k < blocks; ++k) z.segment(static_cast<Eigen::Index>(n) * k, n) = init.at(-k);
  return z;
}

Trajectory simulate_lifted(const LiftedSystem& lifted, const Eigen::VectorXd& z0,
                           const InputSignal& input, long horizon) {
  if (horizon < 1) throw ArgumentError("simulate_lifted: horizon must be >= 1");
  if (z0.size() != lifted.a.rows()) throw ArgumentError("simulate_lifted: z0 dimension mismatch");
  Trajectory traj;
  traj.input_description = input.description();
  traj.outputs.resize(lifted.c.rows(), horizon + 1);
  Eigen::VectorXd z = z0;
  traj.outputs.col(0) = lifted.c * z;
  for (long t = 0; t < horizon; ++t) {
    Eigen::VectorXd next = lifted.a * z;
    if (lifted.b.cols() > 0) next.noalias() += lifted.b * input(t);
    z = std::move(next);
    traj.outputs.col(t + 1) = lifted.c * z;
  }
  return traj;
}

namespace {

// z -> Ā z using the block structure.
Eigen::VectorXd lifted_apply(const DelaySystem& system, const Eigen::VectorXd& z) {
  const int n = system.states();
  const int blocks = system.max_delay() + 1;
  Eigen::VectorXd out(z.size());
  Eigen::VectorXd top = system.a0() * z.head(n);
  for (const auto& term : system.delayed()) {
    top.noalias() += term.matrix * z.segment(static_cast<Eigen::Index>(n) * term.delay, n);
  }
  out.head(n) = top;
  if (blocks > 1) out.tail(z.size() - n) = z.head(z.size() - n);
  return out;
}

}  // namespace

double spectral_radius(const DelaySystem& system, const SpectralRadiusOptions& options) {
  const Eigen::Index dim = static_cast<Eigen::Index>(system.states()) * (system.max_delay() + 1);
  if (dim == 0) return 0.0;
  if (dim <= options.dense_limit) {
    const LiftedSystem lifted = lift_to_linear(system);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(lifted.a, false);
    if (solver.info() != Eigen::Success) throw NumericalError("spectral_radius: eigensolver failed");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
  }

  // Explicitly restarted Arnoldi on the lifted operator; restart from the dominant Ritz vector
  // (real and imaginary parts combined so a conjugate pair stays in the subspace).
  const Eigen::Index m = std::min<Eigen::Index>(dim, std::max(2, options.krylov_dimension));
  Eigen::VectorXd start(dim);
  for (Eigen::Index i = 0; i < dim; ++i) start(i) = 1.0 + 0.5 * std::sin(static_cast<double>(i + 1));
  double previous = -1.0;
  double estimate = 0.0;
  double residual = 0.0;
  long applied = 0;
  Eigen::MatrixXd basis(dim, m + 1);
  Eigen::MatrixXd hessenberg(m + 1, m);
  while (applied < options.max_iterations) {
    basis.setZero();
    hessenberg.setZero();
    basis.col(0) = start / start.norm();
    Eigen::Index k = 0;
    bool invariant = false;
    for (; k < m; ++k) {
      Eigen::VectorXd w = lifted_apply(system, basis.col(k));
      ++applied;
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd h = basis.leftCols(k + 1).transpose() * w;
        w.noalias() -= basis.leftCols(k + 1) * h;
        hessenberg.col(k).head(k + 1) += h;
      }
      const double beta = w.norm();
      hessenberg(k + 1, k) = beta;
      if (beta <= 1e-14 * std::max(1.0, hessenberg.col(k).head(k + 1).norm())) {
        invariant = true;
        ++k;
        break;
      }
      basis.col(k + 1) = w / beta;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> ritz(hessenberg.topLeftCorner(k, k), true);
    if (ritz.info() != Eigen::Success) throw NumericalError("spectral_radius: Ritz eigensolver failed");
    Eigen::Index top = 0;
    estimate = ritz.eigenvalues().cwiseAbs().maxCoeff(&top);
    if (invariant) return estimate;
    const Eigen::VectorXcd y = ritz.eigenvectors().col(top).normalized();
    residual = hessenberg(k, k - 1) * std::abs(y(k - 1));
    if (estimate == 0.0) return 0.0;
    if (residual <= options.tolerance * estimate ||
        (previous >= 0.0 && std::abs(estimate - previous) <= options.tolerance * estimate &&
         residual <= std::sqrt(options.tolerance) * estimate)) {
      return estimate;
    }
    previous = estimate;
    const Eigen::VectorXcd x = basis.leftCols(k).cast<std::complex<double>>() * y;
    start = x.real() + x.imag();
    if (start.norm() == 0.0) start = basis.col(k);
  }
  std::ostringstream msg;
  msg << "spectral_radius: Arnoldi iteration did not converge after " << applied
      << " operator applications (lifted dimension " << dim << ", estimate " << estimate
      << ", Ritz residual " << residual << ")";
  throw NumericalError(msg.str());
}

ErrorMetrics error_metrics(const Trajectory& full, const Trajectory& reduced) {
  if (full.outputs.cols() != reduced.outputs.cols()) {
    throw ArgumentError("error_metrics: horizon mismatch");
  }
  if (full.outputs.rows() != reduced.outputs.rows()) {
    throw ArgumentError("error_metrics: output dimension mismatch");
  }
  const Eigen::MatrixXd diff = full.outputs - reduced.outputs;
  ErrorMetrics metrics;
  metrics.absolute.resize(diff.cols());
  for (Eigen::Index t = 0; t < diff.cols(); ++t) {
    metrics.absolute(t) = diff.rows() > 0 ? diff.col(t).cwiseAbs().maxCoeff() : 0.0;
  }
  metrics.max_abs = metrics.absolute.size() > 0 ? metrics.absolute.maxCoeff() : 0.0;
  const double denom = full.outputs.norm();
  const double numer = diff.norm();
  metrics.rel_l2 = denom == 0.0 ? (numer == 0.0 ? 0.0 : std::numeric_limits<double>::infinity())
                                : numer / denom;
  return metrics;
}

std::string method_name(Method method) {
  switch (method) {
    case Method::walsh: return "walsh";
    case Method::combbt: return "combbt";
    case Method::grambt: return "grambt";
    case Method::dominant: return "dominant";
    case Method::lifted_walsh: return "lifted-walsh";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::walsh, Method::combbt, Method::grambt, Method::dominant,
                   Method::lifted_walsh}) {
    if (method_name(m) == name) return m;
  }
  throw ArgumentError("unknown method '" + name +
                      "' (expected walsh, combbt, grambt, dominant, lifted-walsh)");
}

ReducedSystem project_system(const DelaySystem& system, const InitialData& init,
                             const Eigen::MatrixXd& v, const Eigen::MatrixXd& w, Method method) {
  if (v.rows() != system.states() || w.rows() != system.states() || v.cols() != w.cols()) {
    throw ArgumentError("project_system: projection matrices " + dims(v) + " and " + dims(w) +
                        " do not fit n = " + std::to_string(system.states()));
  }
  const Eigen::MatrixXd wt = w.transpose();
  std::vector<DelayTerm> delayed;
  for (const auto& term : system.delayed()) delayed.push_back({wt * term.matrix * v, term.delay});
  std::vector<Eigen::VectorXd> history;
  for (int j = 0; j <= init.max_lag(); ++j) history.push_back(wt * init.at(-j));

  ReducedSystem reduced;
  reduced.system = DelaySystem(wt * system.a0() * v, std::move(delayed), wt * system.b(),
                               system.c() * v);
  reduced.init = InitialData(std::move(history));
  reduced.v = v;
  reduced.w = w;
  reduced.method = method;
  reduced.info.parameters["r"] = static_cast<double>(v.cols());
  return reduced;
}

void check_stability(const DelaySystem& full, const DelaySystem& reduced, ReductionInfo& info) {
  const SpectralRadiusOptions options;
  const auto start = std::chrono::steady_clock::now();
  const auto check = [&](const DelaySystem& system, const std::string& key, const std::string& what) {
    const Eigen::Index dim = static_cast<Eigen::Index>(system.states()) * (system.max_delay() + 1);
    if (dim > options.dense_limit) {
      const std::string note = what + " stability not checked: lifted dimension " + std::to_string(dim) +
                               " exceeds the dense eigenvalue limit";
      info.warnings.push_back(note);
      warn(note);
      return;
    }
    const double rho = spectral_radius(system, options);
    info.diagnostics[key] = rho;
    if (rho >= 1.0) {
      std::ostringstream msg;
      msg.precision(17);
      msg << what << " is not exponentially stable (spectral radius " << rho << ")";
      info.warnings.push_back(msg.str());
      warn(msg.str());
    }
  };
  check(full, "spectral_radius", "full system");
  check(reduced, "reduced_spectral_radius", "reduced model");
  info.phase_seconds.emplace_back(
      "stability_check", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

}  // namespace tdsmor
