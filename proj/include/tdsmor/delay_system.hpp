#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tdsmor {

struct DelayTerm {
  Eigen::MatrixXd matrix;
  int delay = 1;
};

/// x(t+1) = A0 x(t) + sum_l A_l x(t - d_l) + B u(t),  y(t) = C x(t).
class DelaySystem {
 public:
  DelaySystem() = default;
  /// Validates dimensions; delays must be >= 1 and strictly increasing.
  DelaySystem(Eigen::MatrixXd a0, std::vector<DelayTerm> delayed, Eigen::MatrixXd b,
              Eigen::MatrixXd c);

  int states() const { return static_cast<int>(a0_.rows()); }
  int inputs() const { return static_cast<int>(b_.cols()); }
  int outputs() const { return static_cast<int>(c_.rows()); }
  int max_delay() const { return delayed_.empty() ? 0 : delayed_.back().delay; }

  const Eigen::MatrixXd& a0() const { return a0_; }
  const std::vector<DelayTerm>& delayed() const { return delayed_; }
  const Eigen::MatrixXd& b() const { return b_; }
  const Eigen::MatrixXd& c() const { return c_; }

  /// The same recursion with every coefficient transposed and B, C swapped (C^T drives, B^T observes).
  DelaySystem transposed() const;

 private:
  Eigen::MatrixXd a0_;
  std::vector<DelayTerm> delayed_;
  Eigen::MatrixXd b_;
  Eigen::MatrixXd c_;
};

/// History phi(j) for j in [-max_lag, 0] with span bases phi(j) = X_j w_j.
class InitialData {
 public:
  InitialData() = default;

  /// history[j] holds phi(-j). Bases default to phi/|phi| (empty when phi = 0).
  explicit InitialData(std::vector<Eigen::VectorXd> history);
  /// Explicit bases; each phi(-j) must lie in the span of bases[j] to 1e-12 relative.
  InitialData(std::vector<Eigen::VectorXd> history, std::vector<Eigen::MatrixXd> bases);

  static InitialData zero(int n, int max_lag);

  int dimension() const { return history_.empty() ? 0 : static_cast<int>(history_[0].size()); }
  int max_lag() const { return static_cast<int>(history_.size()) - 1; }

  /// phi(j), j in [-max_lag, 0].
  const Eigen::VectorXd& at(int j) const;
  const Eigen::MatrixXd& basis(int j) const;
  const Eigen::VectorXd& weights(int j) const;

  bool is_zero() const;

 private:
  std::vector<Eigen::VectorXd> history_;
  std::vector<Eigen::MatrixXd> bases_;
  std::vector<Eigen::VectorXd> weights_;
};

/// u(t) from a closed-form generator or stored samples.
class InputSignal {
 public:
  using Generator = std::function<Eigen::VectorXd(long)>;

  InputSignal() = default;
  InputSignal(int channels, Generator generator, std::string description);

  static InputSignal zero(int channels);
  /// Column t holds u(t); evaluation past the last column is an argument error.
  static InputSignal sampled(Eigen::MatrixXd samples, std::string description = "samples");

  int channels() const { return channels_; }
  const std::string& description() const { return description_; }
  /// Number of stored samples, or -1 for generators.
  long length() const { return length_; }

  Eigen::VectorXd operator()(long t) const;
  /// u(0..count-1) as columns.
  Eigen::MatrixXd samples(long count) const;

 private:
  int channels_ = 0;
  long length_ = -1;
  Generator generator_;
  std::string description_;
};

struct Trajectory {
  /// y(0..T) column-wise.
  Eigen::MatrixXd outputs;
  /// x(0..T) column-wise when retained.
  std::optional<Eigen::MatrixXd> states;
  std::string input_description;

  long horizon() const { return outputs.cols() - 1; }
};

Trajectory simulate(const DelaySystem& system, const InitialData& init, const InputSignal& input,
                    long horizon, bool keep_states = false);

/// Psi(0..t_max) with Psi(0) = I and zero prehistory.
std::vector<Eigen::MatrixXd> fundamental_matrix(const DelaySystem& system, long t_max);

/// Psi(0..t_max) M, computed without forming Psi.
std::vector<Eigen::MatrixXd> fundamental_applied(const DelaySystem& system,
                                                 const Eigen::MatrixXd& m, long t_max);

/// Companion form on z(t) = [x(t); x(t-1); ...; x(t-d_max)].
struct LiftedSystem {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd c;
  int block_size = 0;
  int blocks = 0;
};

LiftedSystem lift_to_linear(const DelaySystem& system);
Eigen::VectorXd stack_initial(const InitialData& init, int blocks);
Trajectory simulate_lifted(const LiftedSystem& lifted, const Eigen::VectorXd& z0,
                           const InputSignal& input, long horizon);

struct SpectralRadiusOptions {
  /// Lifted dimension up to which dense eigenvalues are used.
  int dense_limit = 3000;
  /// Operator applications allowed on the iterative path.
  int max_iterations = 20000;
  double tolerance = 1e-10;
  int krylov_dimension = 60;
};

/// Spectral radius of the lifted matrix.
double spectral_radius(const DelaySystem& system, const SpectralRadiusOptions& options = {});

struct ErrorMetrics {
  /// |y(t) - yhat(t)|_inf per step.
  Eigen::VectorXd absolute;
  double rel_l2 = 0.0;
  double max_abs = 0.0;
};

ErrorMetrics error_metrics(const Trajectory& full, const Trajectory& reduced);

enum class Method { walsh, combbt, grambt, dominant, lifted_walsh };

std::string method_name(Method method);
Method parse_method(const std::string& name);

struct ReductionInfo {
  std::map<std::string, double> parameters;
  std::vector<double> singular_values;
  std::map<std::string, double> diagnostics;
  std::vector<std::pair<std::string, double>> phase_seconds;
  std::vector<std::string> warnings;
};

struct ReducedSystem {
  DelaySystem system;
  InitialData init;
  Eigen::MatrixXd v;
  Eigen::MatrixXd w;
  Method method = Method::walsh;
  ReductionInfo info;

  int order() const { return system.states(); }
};

/// Petrov-Galerkin projection: W^T A V, W^T B, C V and x̂(j) = W^T phi(j).
ReducedSystem project_system(const DelaySystem& system, const InitialData& init,
                             const Eigen::MatrixXd& v, const Eigen::MatrixXd& w, Method method);

/// Records the lifted spectral radius of the full system and of the reduced model as
/// `spectral_radius` and `reduced_spectral_radius`; warns when either is >= 1 or too large to check.
void check_stability(const DelaySystem& full, const DelaySystem& reduced, ReductionInfo& info);

}  // namespace tdsmor
