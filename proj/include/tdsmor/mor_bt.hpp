#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tdsmor/delay_system.hpp"
#include "tdsmor/laguerre_basis.hpp"

namespace tdsmor {

/// One part of the superposition: the forced part with zero history, or an autonomous part
/// driven by a single history vector.
struct Subsystem {
  std::string label;
  InitialData init;
  bool forced = false;
  /// History index j this part carries (0 for x0, j < 0 for neg parts, 1 for the forced part).
  int lag = 1;
};

struct SubsystemSet {
  std::vector<Subsystem> parts;
};

/// Forced part, x0 part, then one part per j in [-d_max, -1].
SubsystemSet decompose(const DelaySystem& system, const InitialData& init);

Trajectory simulate_part(const DelaySystem& system, const Subsystem& part, const InputSignal& input,
                         long horizon);

enum class GramianKind { p_zero, p_x0, p_neg, p_combined, q };

struct GramianOptions {
  long initial_horizon = 64;
  long max_horizon = 1L << 20;
  /// Required relative Frobenius agreement between horizons H and 2H.
  double tolerance = 1e-10;
  /// p_neg only: history index j in [-d_l, -1] and position l in the delay list.
  int lag = -1;
  int delay_index = 0;
};

struct GramianResult {
  Eigen::MatrixXd value;
  long horizon = 0;
  double relative_change = 0.0;
  bool certified = false;
};

/// Truncated Gramian sum with a doubling horizon; domain error when the system is unstable.
GramianResult gramian_oracle(const DelaySystem& system, const InitialData& init, GramianKind kind,
                             const GramianOptions& options = {});

/// exact: the projected recursion (default). basis_shift: the dense block system with
/// L(t-d) = T^{-d} L(t) and the Psi(0) row.
enum class LaguerreSystem { exact, basis_shift };

std::string laguerre_system_name(LaguerreSystem form);
LaguerreSystem parse_laguerre_system(const std::string& name);

struct LaguerreOptions {
  LaguerreSystem form = LaguerreSystem::exact;
  /// Largest Kn for the dense basis_shift system.
  long dense_limit = 4096;
  double min_rcond = 1e-14;
};

struct LaguerreFundamental {
  int K = 0;
  double s = 0.0;
  LaguerreSystem form = LaguerreSystem::exact;
  /// F_i M for the M the coefficients were applied to (identity for the full expansion).
  std::vector<Eigen::MatrixXd> coefficients;
  double residual = 0.0;
  /// |sum_i F_i L_i(0) - M|_F / |M|_F.
  double initial_mismatch = 0.0;
};

/// F_0..F_{K-1} with Psi(t) ~ sum_i F_i L_i(t).
LaguerreFundamental laguerre_coefficients(const DelaySystem& system, int K, double s,
                                          const LaguerreOptions& options = {});

/// F_i M without forming F_i (exact form; basis_shift multiplies the full coefficients).
LaguerreFundamental laguerre_applied(const DelaySystem& system, int K, double s,
                                     const Eigen::MatrixXd& m, const LaguerreOptions& options = {});

/// sum_i coefficients[i] L_i(t).
Eigen::MatrixXd laguerre_reconstruct(const LaguerreFundamental& expansion, long t);

struct FactorBlock {
  /// "B", "x0" or "neg".
  std::string source;
  int delay_index = -1;
  int lag = 0;
  /// Columns per Laguerre index; the block occupies K * width columns starting at offset.
  int width = 0;
  Eigen::Index offset = 0;
};

struct LowRankGramians {
  /// P ~ x_in x_in^T; blocks [F_0 M, ..., F_{K-1} M] per source.
  Eigen::MatrixXd x_in;
  /// Q ~ y_out y_out^T; columns (C F_i)^T per i.
  Eigen::MatrixXd y_out;
  std::vector<FactorBlock> blocks;
  int K = 0;
  double residual = 0.0;
};

/// Initial-condition columns [X_0 | A_l X_j ...] in block order (empty when include_initial is false).
LowRankGramians lowrank_factors(const DelaySystem& system, const InitialData& init, int K, double s,
                                bool include_initial, const LaguerreOptions& options = {});

/// Same factors from precomputed full coefficients (M = I).
LowRankGramians lowrank_factors(const DelaySystem& system, const LaguerreFundamental& expansion,
                                const InitialData& init, bool include_initial);

struct BtOptions {
  int K = 40;
  double s = 0.81;
  LaguerreOptions laguerre;
  bool check_stability = true;
};

ReducedSystem reduce_combbt(const DelaySystem& system, const InitialData& init, int r,
                            const BtOptions& options = {});
/// Zero-initial-condition baseline; init only supplies x̂(j) = W^T phi(j).
ReducedSystem reduce_grambt(const DelaySystem& system, const InitialData& init, int r,
                            const BtOptions& options = {});
ReducedSystem reduce_dominant(const DelaySystem& system, const InitialData& init, int r,
                              const BtOptions& options = {});

/// Balanced truncation from given factors (shared by combbt and grambt).
ReducedSystem balance_factors(const DelaySystem& system, const InitialData& init,
                              const LowRankGramians& factors, int r, Method method);

}  // namespace tdsmor
