#include "tdsmor/mor_bt.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>

#include "timing.hpp"
#include "tdsmor/errors.hpp"
#include "tdsmor/linalg.hpp"

namespace tdsmor {

namespace {

void require_history(const DelaySystem& system, const InitialData& init) {
  if (init.dimension() != system.states() || init.max_lag() < system.max_delay()) {
    throw ArgumentError("initial data does not fit the system (dimension " +
                        std::to_string(init.dimension()) + ", lags " +
                        std::to_string(init.max_lag()) + ")");
  }
}

// Columns driving the controllability-type sums, in block order.
struct InputColumns {
  Eigen::MatrixXd m;
  std::vector<FactorBlock> blocks;
};

InputColumns input_columns(const DelaySystem& system, const InitialData& init,
                           bool include_initial) {
  require_history(system, init);
  std::vector<Eigen::MatrixXd> parts;
  InputColumns out;
  Eigen::Index offset = 0;
  const auto add = [&](Eigen::MatrixXd part, std::string source, int delay_index, int lag) {
    if (part.cols() == 0) return;
    out.blocks.push_back({std::move(source), delay_index, lag, static_cast<int>(part.cols()), offset});
    offset += part.cols();
    parts.push_back(std::move(part));
  };
  add(system.b(), "B", -1, 0);
  if (include_initial) {
    add(init.basis(0), "x0", -1, 0);
    for (std::size_t l = 0; l < system.delayed().size(); ++l) {
      const auto& term = system.delayed()[l];
      for (int j = -1; j >= -term.delay; --j) {
        add(term.matrix * init.basis(j), "neg", static_cast<int>(l), j);
      }
    }
  }
  out.m.resize(system.states(), offset);
  Eigen::Index at = 0;
  for (const auto& part : parts) {
    out.m.middleCols(at, part.cols()) = part;
    at += part.cols();
  }
  return out;
}

// Sum_{t <= H} Z(t) Z(t)^T with Z(t) = Psi(t) M, doubling H until two horizons agree.
GramianResult certified_sum(const DelaySystem& system, const Eigen::MatrixXd& m,
                            const GramianOptions& options) {
  const int n = system.states();
  const int slots = system.max_delay() + 1;
  auto slot = [slots](long t) { return static_cast<int>(((t % slots) + slots) % slots); };
  std::vector<Eigen::MatrixXd> ring(slots, Eigen::MatrixXd::Zero(n, m.cols()));
  ring[slot(0)] = m;
  Eigen::MatrixXd sum = m * m.transpose();
  long t = 0;
  GramianResult result;
  long horizon = std::max(1L, options.initial_horizon);
  Eigen::MatrixXd at_horizon;
  const auto advance_to = [&](long target) {
    while (t < target) {
      Eigen::MatrixXd next = system.a0() * ring[slot(t)];
      for (const auto& term : system.delayed()) {
        if (t - term.delay >= 0) next.noalias() += term.matrix * ring[slot(t - term.delay)];
      }
      ++t;
      ring[slot(t)] = std::move(next);
      sum.noalias() += ring[slot(t)] * ring[slot(t)].transpose();
    }
  };
  advance_to(horizon);
  for (;;) {
    at_horizon = sum;
    advance_to(2 * horizon);
    const double scale = sum.norm();
    result.relative_change = scale == 0.0 ? 0.0 : (sum - at_horizon).norm() / scale;
    result.horizon = 2 * horizon;
    if (result.relative_change <= options.tolerance) {
      result.certified = true;
      break;
    }
    if (2 * horizon >= options.max_horizon) {
      std::ostringstream msg;
      msg << "Gramian horizon " << result.horizon << " not certified: relative change "
          << result.relative_change << " exceeds " << options.tolerance;
      warn(msg.str());
      break;
    }
    horizon *= 2;
  }
  result.value = 0.5 * (sum + sum.transpose());
  return result;
}

std::vector<Eigen::MatrixXd> exact_applied(const DelaySystem& system, int K, double s,
                                           const Eigen::MatrixXd& m, const LaguerreOptions& options,
                                           double& residual) {
  const int n = system.states();
  const Eigen::MatrixXd shift = build_shift_matrix(K, s);
  const Eigen::VectorXd l0 = laguerre_values(K, 0, s);
  std::vector<Eigen::MatrixXd> powers;
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(n, n) - shift(0, 0) * system.a0();
  for (const auto& term : system.delayed()) {
    powers.push_back(shift_powers(shift, term.delay + 1));
    d -= powers.back()(0, 0) * term.matrix;
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(d);
  const double rcond = lu.rcond();
  if (!(rcond >= options.min_rcond)) {
    std::ostringstream msg;
    msg << "Laguerre coefficient system is singular (condition estimate "
        << (rcond > 0.0 ? 1.0 / rcond : INFINITY) << ")";
    throw NumericalError(msg.str());
  }
  std::vector<Eigen::MatrixXd> f;
  f.reserve(K);
  residual = 0.0;
  for (int i = 0; i < K; ++i) {
    Eigen::MatrixXd rhs = l0(i) * m;
    if (i > 0) {
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, m.cols());
      for (int j = 0; j < i; ++j) acc += shift(i, j) * f[j];
      rhs.noalias() += system.a0() * acc;
      for (std::size_t l = 0; l < powers.size(); ++l) {
        acc.setZero();
        for (int j = 0; j < i; ++j) acc += powers[l](i, j) * f[j];
        rhs.noalias() += system.delayed()[l].matrix * acc;
      }
    }
    f.push_back(lu.solve(rhs));
    const double scale = rhs.norm();
    if (scale > 0.0) residual = std::max(residual, (d * f.back() - rhs).norm() / scale);
  }
  return f;
}

std::vector<Eigen::MatrixXd> basis_shift_applied(const DelaySystem& system, int K, double s,
                                                 const Eigen::MatrixXd& m,
                                                 const LaguerreOptions& options,
                                                 double& residual) {
  const int n = system.states();
  const long dim = static_cast<long>(K) * n;
  if (dim > options.dense_limit) {
    throw CapacityError("basis_shift Laguerre system of size Kn = " + std::to_string(dim) +
                        " exceeds the dense cap " + std::to_string(options.dense_limit));
  }
  const Eigen::MatrixXd shift = build_shift_matrix(K, s);
  const Eigen::VectorXd l0 = laguerre_values(K, 0, s);
  std::vector<Eigen::MatrixXd> inverse_powers;
  for (const auto& term : system.delayed()) {
    inverse_powers.push_back(inverse_shift_powers(shift, term.delay));
  }
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(dim, dim);
  for (int j = 0; j < K; ++j) big.block(0, static_cast<Eigen::Index>(j) * n, n, n) = l0(j) * identity;
  for (int i = 0; i + 1 < K; ++i) {
    for (int j = i; j < K; ++j) {
      auto block = big.block(static_cast<Eigen::Index>(i + 1) * n, static_cast<Eigen::Index>(j) * n, n, n);
      block = shift(j, i) * identity;
      if (j == i) block -= system.a0();
      for (std::size_t l = 0; l < inverse_powers.size(); ++l) {
        block -= inverse_powers[l](j, i) * system.delayed()[l].matrix;
      }
    }
  }
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(dim, m.cols());
  rhs.topRows(n) = m;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(big);
  const double rcond = lu.rcond();
  if (!(rcond >= options.min_rcond)) {
    std::ostringstream msg;
    msg << "basis_shift Laguerre block operator is singular (condition estimate "
        << (rcond > 0.0 ? 1.0 / rcond : INFINITY) << ")";
    throw NumericalError(msg.str());
  }
  const Eigen::MatrixXd stacked = lu.solve(rhs);
  residual = rhs.norm() > 0.0 ? (big * stacked - rhs).norm() / rhs.norm() : 0.0;
  std::vector<Eigen::MatrixXd> f;
  for (int i = 0; i < K; ++i) f.push_back(stacked.middleRows(static_cast<Eigen::Index>(i) * n, n));
  return f;
}

Eigen::MatrixXd assemble_blocks(const std::vector<Eigen::MatrixXd>& applied,
                                const std::vector<FactorBlock>& blocks) {
  const int K = static_cast<int>(applied.size());
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += static_cast<Eigen::Index>(b.width) * K;
  Eigen::MatrixXd out(applied.empty() ? 0 : applied[0].rows(), total);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    for (int i = 0; i < K; ++i) {
      out.middleCols(at, b.width) = applied[i].middleCols(b.offset, b.width);
      at += b.width;
    }
  }
  return out;
}

// Offsets of the blocks inside x_in, where each block spans K * width columns.
std::vector<FactorBlock> placed(std::vector<FactorBlock> blocks, int K) {
  Eigen::Index at = 0;
  for (auto& b : blocks) {
    b.offset = at;
    at += static_cast<Eigen::Index>(b.width) * K;
  }
  return blocks;
}

Eigen::MatrixXd hstack(const std::vector<Eigen::MatrixXd>& parts) {
  Eigen::Index cols = 0;
  for (const auto& p : parts) cols += p.cols();
  Eigen::MatrixXd out(parts.empty() ? 0 : parts[0].rows(), cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p;
    at += p.cols();
  }
  return out;
}

void require_order(int r, int rank, const Eigen::VectorXd& sigma, const std::string& what) {
  if (r < 1 || r > rank) {
    throw ArgumentError("requested order r = " + std::to_string(r) + " exceeds the numerical rank " +
                        std::to_string(rank) + " of " + what +
                        " (singular values: " + format_spectrum(sigma) + ")");
  }
}

void record_common(ReductionInfo& info, const BtOptions& options, bool include_initial) {
  info.parameters["K"] = options.K;
  info.parameters["s"] = options.s;
  info.parameters["include_initial"] = include_initial;
  info.parameters["laguerre_basis_shift"] = options.laguerre.form == LaguerreSystem::basis_shift;
}

ReducedSystem balanced_reduction(const DelaySystem& system, const InitialData& init, int r,
                                 const BtOptions& options, bool include_initial, Method method) {
  std::vector<std::pair<std::string, double>> phases;
  detail::PhaseTimer timer(phases);
  const LowRankGramians factors =
      lowrank_factors(system, init, options.K, options.s, include_initial, options.laguerre);
  timer.mark("factors");
  ReducedSystem reduced = balance_factors(system, init, factors, r, method);
  timer.mark("balance");
  record_common(reduced.info, options, include_initial);
  reduced.info.phase_seconds = std::move(phases);
  if (options.check_stability) check_stability(system, reduced.system, reduced.info);
  return reduced;
}

}  // namespace

SubsystemSet decompose(const DelaySystem& system, const InitialData& init) {
  require_history(system, init);
  const int n = system.states();
  const int lags = init.max_lag();
  SubsystemSet set;
  set.parts.push_back({"zero", InitialData::zero(n, lags), true, 1});
  for (int j = 0; j >= -system.max_delay(); --j) {
    std::vector<Eigen::VectorXd> history(lags + 1, Eigen::VectorXd::Zero(n));
    history[-j] = init.at(j);
    set.parts.push_back({j == 0 ? "x0" : "neg" + std::to_string(j), InitialData(std::move(history)),
                         false, j});
  }
  return set;
}

Trajectory simulate_part(const DelaySystem& system, const Subsystem& part, const InputSignal& input,
                         long horizon) {
  if (part.forced) return simulate(system, part.init, input, horizon);
  return simulate(system, part.init, InputSignal::zero(system.inputs()), horizon);
}

GramianResult gramian_oracle(const DelaySystem& system, const InitialData& init, GramianKind kind,
                             const GramianOptions& options) {
  const double rho = spectral_radius(system);
  if (rho >= 1.0) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "Gramians are undefined: spectral radius " << rho << " >= 1";
    throw DomainError(msg.str());
  }
  switch (kind) {
    case GramianKind::p_zero:
      return certified_sum(system, system.b(), options);
    case GramianKind::p_x0:
      require_history(system, init);
      return certified_sum(system, init.basis(0), options);
    case GramianKind::p_neg: {
      require_history(system, init);
      if (options.delay_index < 0 ||
          options.delay_index >= static_cast<int>(system.delayed().size())) {
        throw ArgumentError("gramian_oracle: delay index out of range");
      }
      const auto& term = system.delayed()[options.delay_index];
      if (options.lag > -1 || options.lag < -term.delay) {
        throw ArgumentError("gramian_oracle: lag must lie in [-d_l, -1]");
      }
      return certified_sum(system, term.matrix * init.basis(options.lag), options);
    }
    case GramianKind::p_combined:
      return certified_sum(system, input_columns(system, init, true).m, options);
    case GramianKind::q:
      return certified_sum(system.transposed(), system.c().transpose(), options);
  }
  throw ArgumentError("gramian_oracle: unknown kind");
}

std::string laguerre_system_name(LaguerreSystem form) {
  return form == LaguerreSystem::exact ? "exact" : "basis_shift";
}

LaguerreSystem parse_laguerre_system(const std::string& name) {
  if (name == "exact") return LaguerreSystem::exact;
  if (name == "basis_shift" || name == "basis-shift") return LaguerreSystem::basis_shift;
  throw ArgumentError("unknown Laguerre system '" + name + "' (expected exact or basis_shift)");
}

LaguerreFundamental laguerre_applied(const DelaySystem& system, int K, double s,
                                     const Eigen::MatrixXd& m, const LaguerreOptions& options) {
  if (K < 2) throw ArgumentError("laguerre_coefficients: K must be >= 2");
  if (m.rows() != system.states()) throw ArgumentError("laguerre_applied: row mismatch");
  LaguerreFundamental out;
  out.K = K;
  out.s = s;
  out.form = options.form;
  out.coefficients = options.form == LaguerreSystem::exact
                         ? exact_applied(system, K, s, m, options, out.residual)
                         : basis_shift_applied(system, K, s, m, options, out.residual);
  const double scale = m.norm();
  out.initial_mismatch = scale > 0.0 ? (laguerre_reconstruct(out, 0) - m).norm() / scale : 0.0;
  return out;
}

LaguerreFundamental laguerre_coefficients(const DelaySystem& system, int K, double s,
                                          const LaguerreOptions& options) {
  return laguerre_applied(system, K, s,
                          Eigen::MatrixXd::Identity(system.states(), system.states()), options);
}

Eigen::MatrixXd laguerre_reconstruct(const LaguerreFundamental& expansion, long t) {
  if (expansion.coefficients.empty()) throw ArgumentError("laguerre_reconstruct: empty expansion");
  const Eigen::VectorXd l = laguerre_values(expansion.K, t, expansion.s);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(expansion.coefficients[0].rows(),
                                              expansion.coefficients[0].cols());
  for (int i = 0; i < expansion.K; ++i) out += l(i) * expansion.coefficients[i];
  return out;
}

LowRankGramians lowrank_factors(const DelaySystem& system, const InitialData& init, int K, double s,
                                bool include_initial, const LaguerreOptions& options) {
  const InputColumns columns = input_columns(system, init, include_initial);
  const LaguerreFundamental in = laguerre_applied(system, K, s, columns.m, options);
  const LaguerreFundamental out =
      laguerre_applied(system.transposed(), K, s, system.c().transpose(), options);
  LowRankGramians factors;
  factors.K = K;
  factors.x_in = assemble_blocks(in.coefficients, columns.blocks);
  factors.blocks = placed(columns.blocks, K);
  factors.y_out = hstack(out.coefficients);
  factors.residual = std::max(in.residual, out.residual);
  return factors;
}

LowRankGramians lowrank_factors(const DelaySystem& system, const LaguerreFundamental& expansion,
                                const InitialData& init, bool include_initial) {
  if (expansion.coefficients.empty() || expansion.coefficients[0].cols() != system.states()) {
    throw ArgumentError("lowrank_factors: expansion must hold the full n x n coefficients");
  }
  const InputColumns columns = input_columns(system, init, include_initial);
  std::vector<Eigen::MatrixXd> applied;
  std::vector<Eigen::MatrixXd> observed;
  for (const auto& f : expansion.coefficients) {
    applied.push_back(f * columns.m);
    observed.push_back((system.c() * f).transpose());
  }
  LowRankGramians factors;
  factors.K = expansion.K;
  factors.x_in = assemble_blocks(applied, columns.blocks);
  factors.blocks = placed(columns.blocks, static_cast<int>(applied.size()));
  factors.y_out = hstack(observed);
  factors.residual = expansion.residual;
  return factors;
}

ReducedSystem balance_factors(const DelaySystem& system, const InitialData& init,
                              const LowRankGramians& factors, int r, Method method) {
  const Eigen::MatrixXd cross = factors.y_out.transpose() * factors.x_in;
  const ThinSvd svd = thin_svd(cross);
  const int rank = numerical_rank(svd.sigma, default_rank_tolerance(cross.rows(), cross.cols()));
  require_order(r, rank, svd.sigma, "Y_out^T X_in");
  const Eigen::VectorXd scale = svd.sigma.head(r).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd w = factors.y_out * svd.u.leftCols(r) * scale.asDiagonal();
  const Eigen::MatrixXd v = factors.x_in * svd.v.leftCols(r) * scale.asDiagonal();
  ReducedSystem reduced = project_system(system, init, v, w, method);
  reduced.info.singular_values.assign(svd.sigma.data(), svd.sigma.data() + svd.sigma.size());
  reduced.info.diagnostics["biorthogonality_error"] =
      (w.transpose() * v - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff();
  reduced.info.diagnostics["numerical_rank"] = rank;
  reduced.info.diagnostics["laguerre_residual"] = factors.residual;
  return reduced;
}

ReducedSystem reduce_combbt(const DelaySystem& system, const InitialData& init, int r,
                            const BtOptions& options) {
  return balanced_reduction(system, init, r, options, true, Method::combbt);
}

ReducedSystem reduce_grambt(const DelaySystem& system, const InitialData& init, int r,
                            const BtOptions& options) {
  return balanced_reduction(system, init, r, options, false, Method::grambt);
}

ReducedSystem reduce_dominant(const DelaySystem& system, const InitialData& init, int r,
                              const BtOptions& options) {
  std::vector<std::pair<std::string, double>> phases;
  detail::PhaseTimer timer(phases);
  const LowRankGramians factors =
      lowrank_factors(system, init, options.K, options.s, true, options.laguerre);
  timer.mark("factors");
  const Eigen::MatrixXd z = hstack({factors.x_in, factors.y_out});
  const ThinSvd svd = thin_svd(z);
  const int rank = numerical_rank(svd.sigma, default_rank_tolerance(z.rows(), z.cols()));
  require_order(r, rank, svd.sigma, "[X_in Y_out]");
  const Eigen::MatrixXd basis = svd.u.leftCols(r);
  timer.mark("svd");
  ReducedSystem reduced = project_system(system, init, basis, basis, Method::dominant);
  timer.mark("project");
  ReductionInfo& info = reduced.info;
  record_common(info, options, true);
  info.singular_values.assign(svd.sigma.data(), svd.sigma.data() + svd.sigma.size());
  info.diagnostics["numerical_rank"] = rank;
  info.diagnostics["laguerre_residual"] = factors.residual;
  info.phase_seconds = std::move(phases);
  const Eigen::Index reduced_dim = static_cast<Eigen::Index>(r) * (system.max_delay() + 1);
  if (options.check_stability) {
    check_stability(system, reduced.system, info);
  } else if (reduced_dim <= SpectralRadiusOptions{}.dense_limit) {
    info.diagnostics["reduced_spectral_radius"] = spectral_radius(reduced.system);
  }
  return reduced;
}

}  // namespace tdsmor
