#include "tdsmor/mor_walsh.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>

#include "timing.hpp"
#include "tdsmor/errors.hpp"

namespace tdsmor {

namespace {

// Op(X) = X m_identity + A0 X m_a0 + sum_l A_l X m_delayed[l].
struct WalshOperator {
  Eigen::MatrixXd m_identity;
  Eigen::MatrixXd m_a0;
  std::vector<Eigen::MatrixXd> m_delayed;
};

void require_order(const DelaySystem& system, const WalshBasis& basis) {
  if (basis.order() <= system.max_delay()) {
    throw ArgumentError("Walsh order N = " + std::to_string(basis.order()) +
                        " must exceed the largest delay " + std::to_string(system.max_delay()));
  }
}

WalshOperator build_operator(const DelaySystem& system, const WalshBasis& basis,
                             const WalshSolveOptions& options) {
  require_order(system, basis);
  const int N = basis.order();
  const Eigen::MatrixXd& S = basis.summation_matrix();
  WalshOperator op;
  op.m_identity = S;
  if (options.equation == WalshEquation::pointwise) {
    op.m_a0 = -basis.delayed_summation(1);
    for (const auto& term : system.delayed()) {
      op.m_delayed.push_back(-basis.delayed_summation(term.delay + 1));
    }
    return op;
  }
  const Eigen::MatrixXd& R = basis.shift_matrix();
  op.m_a0 = Eigen::MatrixXd::Identity(N, N) - R * S;
  for (const auto& term : system.delayed()) {
    const int d = term.delay;
    Eigen::MatrixXd m = -basis.shift_power(d + 1) * S;
    for (int i = 0; i <= d; ++i) {
      m += options.reduce_cyclic_powers ? basis.shift_power(d - i) : basis.shift_power(N + d - i);
    }
    op.m_delayed.push_back(std::move(m));
  }
  return op;
}

Eigen::MatrixXd apply_operator(const DelaySystem& system, const WalshOperator& op,
                               const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x * op.m_identity;
  out.noalias() += system.a0() * (x * op.m_a0);
  for (std::size_t l = 0; l < op.m_delayed.size(); ++l) {
    out.noalias() += system.delayed()[l].matrix * (x * op.m_delayed[l]);
  }
  return out;
}

// Exact solve of the pointwise equation for an arbitrary right-hand side:
// multiplying by the Walsh matrix turns it into a forward recursion in time.
Eigen::MatrixXd solve_pointwise_structured(const DelaySystem& system, const WalshBasis& basis,
                                           const Eigen::MatrixXd& rhs) {
  const int N = basis.order();
  const int n = system.states();
  const Eigen::MatrixXd w = basis.walsh_matrix().cast<double>();
  const Eigen::MatrixXd g = rhs * w;
  // samples.col(k) = x(k+1)
  Eigen::MatrixXd samples(n, N);
  for (int k = 0; k < N; ++k) {
    Eigen::VectorXd next = g.col(k);
    if (k >= 1) {
      next -= g.col(k - 1);
      next.noalias() += system.a0() * samples.col(k - 1);
    }
    for (const auto& term : system.delayed()) {
      if (k >= term.delay + 1) next.noalias() += term.matrix * samples.col(k - term.delay - 1);
    }
    samples.col(k) = next;
  }
  return samples * w / static_cast<double>(N);
}

struct GmresOutcome {
  Eigen::VectorXd solution;
  double relative_residual = 0.0;
  int iterations = 0;
};

template <class Apply>
GmresOutcome gmres(const Apply& apply, const Eigen::VectorXd& b, int restart, int max_iterations,
                   double tol) {
  const Eigen::Index dim = b.size();
  GmresOutcome out;
  out.solution = Eigen::VectorXd::Zero(dim);
  const double b_norm = b.norm();
  if (b_norm == 0.0) return out;
  Eigen::VectorXd residual = b;
  while (out.iterations < max_iterations) {
    const double beta = residual.norm();
    out.relative_residual = beta / b_norm;
    if (out.relative_residual <= tol) break;
    Eigen::MatrixXd basis(dim, restart + 1);
    Eigen::MatrixXd hessenberg = Eigen::MatrixXd::Zero(restart + 1, restart);
    Eigen::VectorXd cs(restart), sn(restart), gvec = Eigen::VectorXd::Zero(restart + 1);
    basis.col(0) = residual / beta;
    gvec(0) = beta;
    int used = 0;
    for (int j = 0; j < restart && out.iterations < max_iterations; ++j, ++out.iterations) {
      Eigen::VectorXd w = apply(basis.col(j));
      for (int i = 0; i <= j; ++i) {
        hessenberg(i, j) = basis.col(i).dot(w);
        w -= hessenberg(i, j) * basis.col(i);
      }
      hessenberg(j + 1, j) = w.norm();
      if (hessenberg(j + 1, j) > 0.0) basis.col(j + 1) = w / hessenberg(j + 1, j);
      for (int i = 0; i < j; ++i) {
        const double tmp = cs(i) * hessenberg(i, j) + sn(i) * hessenberg(i + 1, j);
        hessenberg(i + 1, j) = -sn(i) * hessenberg(i, j) + cs(i) * hessenberg(i + 1, j);
        hessenberg(i, j) = tmp;
      }
      const double denom = std::hypot(hessenberg(j, j), hessenberg(j + 1, j));
      cs(j) = denom == 0.0 ? 1.0 : hessenberg(j, j) / denom;
      sn(j) = denom == 0.0 ? 0.0 : hessenberg(j + 1, j) / denom;
      hessenberg(j, j) = denom;
      hessenberg(j + 1, j) = 0.0;
      gvec(j + 1) = -sn(j) * gvec(j);
      gvec(j) = cs(j) * gvec(j);
      used = j + 1;
      if (std::abs(gvec(j + 1)) / b_norm <= tol || denom == 0.0) {
        ++out.iterations;
        break;
      }
    }
    const Eigen::VectorXd y = hessenberg.topLeftCorner(used, used)
                                  .triangularView<Eigen::Upper>()
                                  .solve(gvec.head(used));
    out.solution += basis.leftCols(used) * y;
    residual = b - apply(out.solution);
    out.relative_residual = residual.norm() / b_norm;
  }
  return out;
}

Eigen::Map<const Eigen::VectorXd> as_vector(const Eigen::MatrixXd& m) {
  return {m.data(), m.size()};
}

Eigen::MatrixXd as_matrix(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

}  // namespace

std::string equation_name(WalshEquation equation) {
  return equation == WalshEquation::pointwise ? "pointwise" : "terminal";
}

WalshEquation parse_equation(const std::string& name) {
  if (name == "pointwise") return WalshEquation::pointwise;
  if (name == "terminal") return WalshEquation::terminal;
  throw ArgumentError("unknown Walsh equation '" + name + "' (expected pointwise or terminal)");
}

Eigen::MatrixXd input_walsh_coefficients(const InputSignal& input, const WalshBasis& basis) {
  return basis.project(input.samples(basis.order()));
}

Eigen::MatrixXd initial_walsh_coefficients(const InitialData& init, int j,
                                           const WalshBasis& basis) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(init.dimension(), basis.order());
  q.col(0) = init.at(j);
  return q;
}

Eigen::MatrixXd walsh_operator_apply(const DelaySystem& system, const WalshBasis& basis,
                                     const Eigen::MatrixXd& coefficients,
                                     const WalshSolveOptions& options) {
  return apply_operator(system, build_operator(system, basis, options), coefficients);
}

Eigen::MatrixXd walsh_rhs(const DelaySystem& system, const InitialData& init,
                          const WalshBasis& basis, const Eigen::MatrixXd& input_coefficients,
                          const WalshSolveOptions& options) {
  require_order(system, basis);
  if (init.dimension() != system.states() || init.max_lag() < system.max_delay()) {
    throw ArgumentError("walsh_rhs: initial data does not fit the system");
  }
  if (input_coefficients.rows() != system.inputs() || input_coefficients.cols() != basis.order()) {
    throw ArgumentError("walsh_rhs: input coefficients must be m x N");
  }
  const int N = basis.order();
  Eigen::MatrixXd rhs = system.b() * (input_coefficients * basis.summation_matrix());
  if (options.equation == WalshEquation::pointwise) {
    rhs.noalias() += (system.a0() * init.at(0)) * basis.step_coefficients(0);
    for (const auto& term : system.delayed()) {
      for (int i = 0; i <= term.delay; ++i) {
        rhs.noalias() += (term.matrix * init.at(i - term.delay)) * basis.step_coefficients(i);
      }
    }
    return rhs;
  }
  Eigen::RowVectorXd e0 = Eigen::RowVectorXd::Zero(N);
  e0(0) = 1.0;
  rhs.noalias() += (system.a0() * init.at(0)) * e0;
  for (const auto& term : system.delayed()) {
    for (int i = 0; i <= term.delay; ++i) {
      rhs.noalias() += (term.matrix * init.at(i - term.delay)) * e0;
    }
  }
  return rhs;
}

Eigen::MatrixXd walsh_vec_operator(const DelaySystem& system, const WalshBasis& basis,
                                   const WalshSolveOptions& options) {
  const WalshOperator op = build_operator(system, basis, options);
  const int n = system.states();
  const int N = basis.order();
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * N;
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(dim, dim);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  // Block (i, j) of (M^T kron A) is M(j, i) A.
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      auto block = big.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(j) * n, n, n);
      block = op.m_identity(j, i) * identity + op.m_a0(j, i) * system.a0();
      for (std::size_t l = 0; l < op.m_delayed.size(); ++l) {
        block += op.m_delayed[l](j, i) * system.delayed()[l].matrix;
      }
    }
  }
  return big;
}

WalshSolution solve_walsh_coefficients(const DelaySystem& system, const InitialData& init,
                                       const WalshBasis& basis,
                                       const Eigen::MatrixXd& input_coefficients,
                                       const WalshSolveOptions& options) {
  const Eigen::MatrixXd rhs = walsh_rhs(system, init, basis, input_coefficients, options);
  const WalshOperator op = build_operator(system, basis, options);
  const int n = system.states();
  const int N = basis.order();
  const long dim = static_cast<long>(n) * N;

  bool dense = options.route == WalshRoute::dense;
  if (options.route == WalshRoute::automatic) dense = dim <= options.dense_limit;

  WalshSolution sol;
  if (dense) {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(walsh_vec_operator(system, basis, options));
    sol.rcond = lu.rcond();
    if (!(*sol.rcond >= options.min_rcond)) {
      std::ostringstream msg;
      msg << "Walsh vec operator is singular or ill-conditioned (condition estimate "
          << (*sol.rcond > 0.0 ? 1.0 / *sol.rcond : INFINITY) << ", nN = " << dim << ")";
      throw NumericalError(msg.str());
    }
    sol.coefficients = as_matrix(lu.solve(as_vector(rhs)), n, N);
    sol.route = "dense";
  } else if (options.equation == WalshEquation::pointwise) {
    sol.coefficients = solve_pointwise_structured(system, basis, rhs);
    sol.route = "structured";
  } else {
    const auto precondition = [&](const Eigen::VectorXd& z) {
      return solve_pointwise_structured(system, basis, as_matrix(z, n, N));
    };
    const auto apply = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
      const Eigen::MatrixXd y = apply_operator(system, op, precondition(z));
      return as_vector(y);
    };
    const GmresOutcome outcome = gmres(apply, as_vector(rhs), options.gmres_restart,
                                       options.gmres_max_iterations, 1e-3 * options.residual_tol);
    sol.coefficients = precondition(outcome.solution);
    sol.iterations = outcome.iterations;
    sol.route = "gmres";
  }

  sol.residual = (apply_operator(system, op, sol.coefficients) - rhs).norm();
  sol.residual_bound = options.residual_tol *
                       (sol.coefficients.norm() * basis.summation_matrix().norm() + rhs.norm());
  if (!(sol.residual <= sol.residual_bound)) {
    std::ostringstream msg;
    msg << "Walsh equation residual " << sol.residual << " exceeds bound " << sol.residual_bound
        << " (route " << sol.route << ", iterations " << sol.iterations << ")";
    throw NumericalError(msg.str());
  }
  return sol;
}

Eigen::MatrixXd output_walsh_coefficients(const DelaySystem& system, const InitialData& init,
                                          const WalshBasis& basis,
                                          const Eigen::MatrixXd& state_coefficients,
                                          WalshEquation equation) {
  const Eigen::MatrixXd& C = system.c();
  const Eigen::MatrixXd cx = C * state_coefficients;
  Eigen::MatrixXd sum_side;
  if (equation == WalshEquation::pointwise) {
    sum_side = (C * init.at(0)) * basis.step_coefficients(0) + cx * basis.delayed_summation(1);
  } else {
    sum_side = C * initial_walsh_coefficients(init, 0, basis) +
               cx * (basis.shift_matrix() * basis.summation_matrix()) - cx;
  }
  // Y S = sum_side
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis.summation_matrix().transpose());
  return lu.solve(sum_side.transpose()).transpose();
}

OrthonormalBasis build_projection(const Eigen::MatrixXd& state_coefficients,
                                  const InitialData& init, std::optional<double> relative_tol) {
  if (state_coefficients.rows() != init.dimension()) {
    throw ArgumentError("build_projection: dimension mismatch");
  }
  const int lags = init.max_lag() + 1;
  Eigen::MatrixXd assembled(state_coefficients.rows(), state_coefficients.cols() + lags);
  assembled.leftCols(state_coefficients.cols()) = state_coefficients;
  for (int j = 0; j < lags; ++j) assembled.col(state_coefficients.cols() + j) = init.at(-j);
  return orthonormal_basis(assembled, relative_tol);
}

int walsh_log2(int order) {
  if (order < 2 || (order & (order - 1)) != 0) {
    throw ArgumentError("Walsh order N must be a power of two >= 2, got " + std::to_string(order));
  }
  int l = 0;
  while ((1 << l) < order) ++l;
  return l;
}

ReducedSystem reduce_walsh(const DelaySystem& system, const InitialData& init,
                           const InputSignal& input, int order,
                           const WalshReduceOptions& options) {
  std::vector<std::pair<std::string, double>> phases;
  detail::PhaseTimer timer(phases);
  const WalshBasis basis(walsh_log2(order));
  const Eigen::MatrixXd u = input_walsh_coefficients(input, basis);
  timer.mark("basis");
  const WalshSolution sol = solve_walsh_coefficients(system, init, basis, u, options.solve);
  timer.mark("solve");
  const OrthonormalBasis proj = build_projection(sol.coefficients, init, options.rank_tol);
  timer.mark("orthonormalize");
  ReducedSystem reduced = project_system(system, init, proj.basis, proj.basis, Method::walsh);
  timer.mark("project");

  ReductionInfo& info = reduced.info;
  info.parameters["N"] = order;
  info.parameters["rank_tol"] = proj.tolerance;
  info.parameters["equation_terminal"] = options.solve.equation == WalshEquation::terminal;
  info.singular_values.assign(proj.singular_values.data(),
                              proj.singular_values.data() + proj.singular_values.size());
  info.diagnostics["residual"] = sol.residual;
  info.diagnostics["residual_bound"] = sol.residual_bound;
  if (sol.rcond) info.diagnostics["rcond"] = *sol.rcond;
  if (sol.iterations > 0) info.diagnostics["gmres_iterations"] = sol.iterations;
  info.diagnostics["route_dense"] = sol.route == "dense";
  info.phase_seconds = std::move(phases);
  if (options.check_stability) check_stability(system, reduced.system, info);
  return reduced;
}

double verify_coefficient_matching(const DelaySystem& system, const InitialData& init,
                                   const ReducedSystem& reduced, const InputSignal& input,
                                   int order) {
  const WalshBasis basis(walsh_log2(order));
  const Trajectory full = simulate(system, init, input, order - 1);
  const Trajectory red = simulate(reduced.system, reduced.init, input, order - 1);
  const Eigen::MatrixXd y = basis.project(full.outputs);
  const Eigen::MatrixXd y_hat = basis.project(red.outputs);
  return (y - y_hat).cwiseAbs().colwise().maxCoeff().maxCoeff();
}

ReducedSystem reduce_lifted_walsh(const DelaySystem& system, const InitialData& init,
                                  const InputSignal& input, int order,
                                  const LiftedWalshOptions& options) {
  const int n = system.states();
  const int blocks = system.max_delay() + 1;
  const long lifted_dim = static_cast<long>(n) * blocks;
  if (lifted_dim > options.lifted_cap) {
    throw CapacityError("lifted-walsh: lifted dimension n(d_max+1) = " + std::to_string(lifted_dim) +
                        " exceeds the memory cap " + std::to_string(options.lifted_cap) +
                        " (the lifted system cannot be formed)");
  }
  std::vector<std::pair<std::string, double>> phases;
  detail::PhaseTimer timer(phases);
  const LiftedSystem lifted = lift_to_linear(system);
  const DelaySystem flat(lifted.a, {}, lifted.b, lifted.c);
  const InitialData flat_init(std::vector<Eigen::VectorXd>{stack_initial(init, blocks)});
  const WalshBasis basis(walsh_log2(order));
  const Eigen::MatrixXd u = input_walsh_coefficients(input, basis);
  timer.mark("lift");
  const WalshSolution sol = solve_walsh_coefficients(flat, flat_init, basis, u, options.solve);
  timer.mark("solve");
  const OrthonormalBasis proj = build_projection(sol.coefficients, flat_init, options.rank_tol);
  timer.mark("orthonormalize");

  const Eigen::MatrixXd& v_hat = proj.basis;
  const auto part = [&](int k) { return v_hat.middleRows(static_cast<Eigen::Index>(n) * k, n); };
  const Eigen::MatrixXd v0 = part(0);
  const Eigen::MatrixXd v0t = v0.transpose();
  std::vector<DelayTerm> delayed;
  for (const auto& term : system.delayed()) {
    delayed.push_back({v0t * term.matrix * part(term.delay), term.delay});
  }
  std::vector<Eigen::VectorXd> history;
  for (int k = 0; k < blocks; ++k) history.push_back(part(k).transpose() * init.at(-k));

  ReducedSystem reduced;
  reduced.system = DelaySystem(v0t * system.a0() * part(0), std::move(delayed), v0t * system.b(),
                               system.c() * v0);
  reduced.init = InitialData(std::move(history));
  reduced.v = v0;
  reduced.w = v0;
  reduced.method = Method::lifted_walsh;
  timer.mark("project");

  ReductionInfo& info = reduced.info;
  info.parameters["r"] = static_cast<double>(v_hat.cols());
  info.parameters["N"] = order;
  info.parameters["rank_tol"] = proj.tolerance;
  info.parameters["lifted_dimension"] = static_cast<double>(lifted_dim);
  info.singular_values.assign(proj.singular_values.data(),
                              proj.singular_values.data() + proj.singular_values.size());
  info.diagnostics["residual"] = sol.residual;
  info.diagnostics["residual_bound"] = sol.residual_bound;
  info.phase_seconds = std::move(phases);
  return reduced;
}

}  // namespace tdsmor
