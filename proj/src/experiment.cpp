#include "tdsmor/experiment.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <sstream>

#include "tdsmor/benchmarks.hpp"
#include "tdsmor/errors.hpp"
#include "tdsmor/laguerre_basis.hpp"
#include "tdsmor/mor_bt.hpp"
#include "tdsmor/mor_walsh.hpp"
#include "tdsmor/serialization.hpp"
#include "tdsmor/walsh_basis.hpp"

namespace tdsmor {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char separator) {
  std::vector<std::string> parts;
  std::string current;
  for (char ch : s) {
    if (ch == separator) {
      parts.push_back(current);
      current.clear();
    } else {
      current += ch;
    }
  }
  parts.push_back(current);
  return parts;
}

double parse_number(const std::string& token, const std::string& context) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (!token.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ArgumentError("cannot parse number '" + token + "' in input descriptor '" + context + "'");
  }
  return value;
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

Eigen::MatrixXd read_samples(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    for (char& ch : line) {
      if (ch == ',' || ch == '\t') ch = ' ';
    }
    const auto tokens = words(line);
    if (tokens.empty()) continue;
    std::vector<double> row;
    for (const auto& t : tokens) row.push_back(parse_number(t, "file " + path));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ArgumentError("input file " + path + ": ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ArgumentError("input file " + path + " holds no samples");
  Eigen::MatrixXd samples(rows.front().size(), rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t c = 0; c < rows[t].size(); ++c) samples(c, t) = rows[t][c];
  return samples;
}

using Channel = std::function<double(long)>;

}  // namespace

InputSignal parse_input(const std::string& descriptor, int channels) {
  const std::string whole = trim(descriptor);
  if (whole == "zero" || whole.empty()) return InputSignal::zero(channels);

  std::vector<Channel> generated;
  for (const auto& raw : split(whole, ';')) {
    const auto tokens = words(raw);
    if (tokens.empty()) throw ArgumentError("empty channel in input descriptor '" + descriptor + "'");
    const std::string& kind = tokens[0];
    if (kind == "ramp-sine" && tokens.size() == 3) {
      const double a = parse_number(tokens[1], raw);
      const double b = parse_number(tokens[2], raw);
      generated.push_back([a, b](long t) { return a * t * std::sin(b * t); });
    } else if (kind == "exp" && tokens.size() == 2) {
      const double c = parse_number(tokens[1], raw);
      generated.push_back([c](long t) { return std::exp(c * t); });
    } else if (kind == "zero" && tokens.size() == 1) {
      generated.push_back([](long) { return 0.0; });
    } else if (kind == "file" && tokens.size() >= 2) {
      const std::string path = trim(trim(raw).substr(4));
      Eigen::MatrixXd block = read_samples(path);
      for (Eigen::Index row = 0; row < block.rows(); ++row) {
        const Eigen::RowVectorXd series = block.row(row);
        const long length = series.size();
        generated.push_back([series, length, path](long t) {
          if (t < 0 || t >= length) {
            throw ArgumentError("input file " + path + " has " + std::to_string(length) +
                                " samples; step " + std::to_string(t) + " requested");
          }
          return series(t);
        });
      }
    } else {
      throw ArgumentError("unrecognised input descriptor '" + trim(raw) +
                          "' (expected 'ramp-sine a b', 'exp c', 'zero' or 'file PATH')");
    }
  }
  if (static_cast<int>(generated.size()) != channels) {
    throw ArgumentError("input descriptor '" + descriptor + "' defines " +
                        std::to_string(generated.size()) + " channel(s), system has " +
                        std::to_string(channels));
  }
  return InputSignal(
      channels,
      [generated](long t) {
        Eigen::VectorXd u(static_cast<Eigen::Index>(generated.size()));
        for (std::size_t c = 0; c < generated.size(); ++c) u(c) = generated[c](t);
        return u;
      },
      whole);
}

std::string format_number(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value,
                                       std::chars_format::general, 17);
  if (ec != std::errc{}) return "nan";
  return std::string(buffer, ptr);
}

Comparison compare_models(const DelaySystem& system, const InitialData& init,
                          const std::vector<ReducedSystem>& reduced,
                          const std::vector<std::string>& labels, const InputSignal& input,
                          long horizon) {
  if (labels.size() != reduced.size()) throw ArgumentError("compare: one label per model");
  Comparison out;
  out.full = simulate(system, init, input, horizon);
  for (std::size_t k = 0; k < reduced.size(); ++k) {
    const ReducedSystem& model = reduced[k];
    if (model.system.inputs() != system.inputs() || model.system.outputs() != system.outputs()) {
      throw ArgumentError("compare: model '" + labels[k] + "' has " +
                          std::to_string(model.system.inputs()) + " inputs / " +
                          std::to_string(model.system.outputs()) + " outputs, full system has " +
                          std::to_string(system.inputs()) + " / " + std::to_string(system.outputs()));
    }
    ComparedModel entry;
    entry.label = labels[k];
    entry.order = model.order();
    entry.trajectory = simulate(model.system, model.init, input, horizon);
    entry.metrics = error_metrics(out.full, entry.trajectory);
    for (const auto& phase : model.info.phase_seconds) entry.reduction_seconds += phase.second;
    out.models.push_back(std::move(entry));
  }
  return out;
}

std::string comparison_csv(const Comparison& comparison) {
  std::string out = "t";
  const Eigen::Index p = comparison.full.outputs.rows();
  for (Eigen::Index i = 0; i < p; ++i) out += ",y_full_" + std::to_string(i + 1);
  for (const auto& model : comparison.models) {
    for (Eigen::Index i = 0; i < p; ++i) out += "," + model.label + "_y_" + std::to_string(i + 1);
    out += "," + model.label + "_abs_err";
  }
  out += '\n';
  for (Eigen::Index t = 0; t < comparison.full.outputs.cols(); ++t) {
    out += std::to_string(t);
    for (Eigen::Index i = 0; i < p; ++i) out += "," + format_number(comparison.full.outputs(i, t));
    for (const auto& model : comparison.models) {
      for (Eigen::Index i = 0; i < p; ++i) {
        out += "," + format_number(model.trajectory.outputs(i, t));
      }
      out += "," + format_number(model.metrics.absolute(t));
    }
    out += '\n';
  }
  return out;
}

std::string comparison_json(const Comparison& comparison, const std::string& input_descriptor) {
  nlohmann::json j;
  j["input"] = input_descriptor;
  j["horizon"] = comparison.full.horizon();
  j["outputs"] = comparison.full.outputs.rows();
  nlohmann::json models = nlohmann::json::array();
  for (const auto& model : comparison.models) {
    models.push_back({{"label", model.label},
                      {"order", model.order},
                      {"rel_l2", model.metrics.rel_l2},
                      {"max_abs_err", model.metrics.max_abs},
                      {"reduction_seconds", model.reduction_seconds}});
  }
  j["models"] = models;
  return j.dump(2) + "\n";
}

bool SelftestReport::passed() const {
  for (const auto& check : checks) {
    if (!check.passed) return false;
  }
  return !checks.empty();
}

namespace {

struct Verdict {
  bool passed;
  std::string detail;
};

std::string sci(double v) {
  std::ostringstream out;
  out.precision(3);
  out << std::scientific << v;
  return out.str();
}

Verdict check_walsh_identities() {
  double shift_err = 0.0, sum_err = 0.0;
  bool exact = true;
  for (int l = 1; l <= 6; ++l) {
    const WalshBasis basis(l);
    const int N = basis.order();
    const Eigen::MatrixXi& w = basis.walsh_matrix();
    exact = exact && (w * w == N * Eigen::MatrixXi::Identity(N, N)) && (w == w.transpose());
    const Eigen::MatrixXd wd = w.cast<double>();
    Eigen::VectorXd running = Eigen::VectorXd::Zero(N);
    for (int k = 0; k < N; ++k) {
      const int next = (k + 1) % N;
      shift_err = std::max(shift_err,
                           (basis.shift_matrix() * wd.col(next) - wd.col(k)).cwiseAbs().maxCoeff());
      running += wd.col(k);
      sum_err = std::max(sum_err,
                         (basis.summation_matrix() * wd.col(k) - running).cwiseAbs().maxCoeff());
    }
  }
  return {exact && shift_err <= 1e-12 && sum_err <= 1e-10,
          "involution " + std::string(exact ? "exact" : "broken") + ", shift " + sci(shift_err) +
              ", summation " + sci(sum_err)};
}

Verdict check_laguerre_identities() {
  double shift_err = 0.0, orth_err = 0.0;
  for (double s : {0.25, 0.5, 0.81}) {
    const LaguerreBasis basis(12, s);
    for (long k = 0; k <= 32; ++k) {
      shift_err = std::max(shift_err, (basis.shift_matrix() * basis.vector(k) - basis.vector(k + 1))
                                          .cwiseAbs()
                                          .maxCoeff());
    }
    const long horizon = orthonormality_horizon(12, s, 1e-12);
    const Eigen::MatrixXd samples = basis.samples(horizon);
    orth_err = std::max(orth_err, (samples * samples.transpose() - Eigen::MatrixXd::Identity(12, 12))
                                      .cwiseAbs()
                                      .maxCoeff());
  }
  return {shift_err <= 1e-8 && orth_err <= 1e-6,
          "shift " + sci(shift_err) + ", orthonormality " + sci(orth_err)};
}

Verdict check_lifted_equivalence() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Benchmark b = gen_random_stable({8, {1, 3}, seed, 0.1, 1, 2});
    const InputSignal u = parse_input("ramp-sine 0.1 0.3", 1);
    const Trajectory direct = simulate(b.system, b.init, u, 100);
    const LiftedSystem lifted = lift_to_linear(b.system);
    const Trajectory flat = simulate_lifted(lifted, stack_initial(b.init, lifted.blocks), u, 100);
    worst = std::max(worst, (direct.outputs - flat.outputs).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, "max deviation " + sci(worst)};
}

Verdict check_walsh_reduction() {
  double solve_err = 0.0, matching = 0.0, lifting = 0.0;
  for (std::uint64_t seed = 11; seed <= 13; ++seed) {
    const Benchmark b = gen_random_stable({12, {1, 2}, seed, 0.2, 1, 1});
    const InputSignal u = parse_input("ramp-sine 1 0.2", 1);
    const WalshBasis basis(3);
    const Eigen::MatrixXd uc = input_walsh_coefficients(u, basis);
    const WalshSolution sol = solve_walsh_coefficients(b.system, b.init, basis, uc);
    const Trajectory traj = simulate(b.system, b.init, u, basis.order(), true);
    const Eigen::MatrixXd projected = basis.project(traj.states->rightCols(basis.order()));
    solve_err = std::max(solve_err, (sol.coefficients - projected).norm() / projected.norm());
    const ReducedSystem red = reduce_walsh(b.system, b.init, u, basis.order(), {{}, std::nullopt, false});
    const Eigen::MatrixXd y = basis.project(simulate(b.system, b.init, u, basis.order() - 1).outputs);
    matching = std::max(matching, verify_coefficient_matching(b.system, b.init, red, u, basis.order()) /
                                    y.norm());
    const WalshSolution reduced_sol =
        solve_walsh_coefficients(red.system, red.init, basis, uc);
    lifting = std::max(lifting, (sol.coefficients - red.v * reduced_sol.coefficients).norm() /
                                sol.coefficients.norm());
  }
  return {solve_err <= 1e-10 && matching <= 1e-8 && lifting <= 1e-8,
          "coefficients vs projected trajectory " + sci(solve_err) + ", output matching " +
              sci(matching) + ", X - V Xr " + sci(lifting)};
}

Verdict check_superposition() {
  double worst = 0.0;
  for (std::uint64_t seed = 21; seed <= 25; ++seed) {
    const Benchmark b = gen_random_stable({10, {1, 3}, seed, 0.1, 1, 1});
    const InputSignal u = parse_input("ramp-sine 0.5 0.2", 1);
    const Trajectory full = simulate(b.system, b.init, u, 200);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(full.outputs.rows(), full.outputs.cols());
    for (const auto& part : decompose(b.system, b.init).parts) {
      sum += simulate_part(b.system, part, u, 200).outputs;
    }
    worst = std::max(worst, (full.outputs - sum).norm() / full.outputs.norm());
  }
  return {worst <= 1e-11, "relative deviation " + sci(worst)};
}

Verdict check_laguerre_fundamental() {
  const DelaySystem scalar(Eigen::MatrixXd::Constant(1, 1, 0.5),
                           {{Eigen::MatrixXd::Constant(1, 1, 0.1), 1}}, Eigen::MatrixXd::Ones(1, 1),
                           Eigen::MatrixXd::Ones(1, 1));
  const auto psi = fundamental_matrix(scalar, 50);
  const LaguerreFundamental exp = laguerre_coefficients(scalar, 30, 0.25);
  double worst = 0.0;
  for (long t = 0; t <= 50; ++t) {
    worst = std::max(worst, (laguerre_reconstruct(exp, t) - psi[t]).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6, "max reconstruction error (K=30, s=0.25) " + sci(worst)};
}

Verdict check_balanced_truncation() {
  const Benchmark b = gen_random_stable({20, {2}, 31, 0.2, 1, 1});
  const ReducedSystem red = reduce_combbt(b.system, b.init, 6, {20, 0.5, {}, false});
  const double bio = (red.w.transpose() * red.v - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff();
  bool ordered = true;
  for (std::size_t k = 1; k < red.info.singular_values.size(); ++k) {
    ordered = ordered && red.info.singular_values[k] <= red.info.singular_values[k - 1];
  }
  return {bio <= 1e-8 && ordered, "W^T V - I " + sci(bio) + (ordered ? ", spectrum ordered" : ", spectrum unordered")};
}

Verdict check_serialization() {
  const Benchmark b = gen_random_stable({6, {1, 2}, 41, 0.1, 2, 1});
  const ModelRecord record = make_record("random", b.system, b.init);
  const ModelRecord back = decode_binary(encode_binary(record));
  const bool same = encode_binary(back) == encode_binary(record);
  const ModelRecord text = decode_json(encode_json(record));
  const bool text_same = encode_binary(text) == encode_binary(record);
  return {same && text_same, std::string("binary ") + (same ? "bit-exact" : "differs") + ", text " +
                                 (text_same ? "bit-exact" : "differs")};
}

}  // namespace

SelftestReport run_selftest() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> suites = {
      {"walsh-identities", check_walsh_identities},
      {"laguerre-identities", check_laguerre_identities},
      {"lifted-equivalence", check_lifted_equivalence},
      {"walsh-reduction", check_walsh_reduction},
      {"superposition", check_superposition},
      {"laguerre-fundamental", check_laguerre_fundamental},
      {"balanced-truncation", check_balanced_truncation},
      {"serialization", check_serialization},
  };
  SelftestReport report;
  for (const auto& [name, run] : suites) {
    SelftestCheck check;
    check.name = name;
    const auto start = std::chrono::steady_clock::now();
    try {
      const Verdict v = run();
      check.passed = v.passed;
      check.detail = v.detail;
    } catch (const std::exception& e) {
      check.passed = false;
      check.detail = std::string("exception: ") + e.what();
    }
    check.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.checks.push_back(std::move(check));
  }
  return report;
}

}  // namespace tdsmor
