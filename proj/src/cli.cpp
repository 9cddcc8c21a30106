#include "tdsmor/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <iostream>
#include <json.hpp>
#include <optional>

#include "tdsmor/benchmarks.hpp"
#include "tdsmor/errors.hpp"
#include "tdsmor/experiment.hpp"
#include "tdsmor/mor_bt.hpp"
#include "tdsmor/mor_walsh.hpp"
#include "tdsmor/serialization.hpp"
#include "tdsmor/walsh_basis.hpp"

namespace tdsmor::cli {

namespace {

struct SystemSource {
  std::string path;
  std::string benchmark;
  int size = 0;
  double dt = 0.005;
  std::vector<int> delays{1};
  double margin = 0.1;
  std::uint64_t seed = 1;
  int inputs = 1;
  int outputs = 1;
};

void add_source_options(CLI::App& app, SystemSource& src, bool allow_path) {
  if (allow_path) app.add_option("--system", src.path, "Model file (binary or JSON)");
  app.add_option("--benchmark", src.benchmark, "platoon, convdiff, rod or random")
      ->check(CLI::IsMember({"platoon", "convdiff", "rod", "random"}));
  app.add_option("--size", src.size,
                 "platoon: n; convdiff: grid width h; rod: n; random: n (default per benchmark)");
  app.add_option("--dt", src.dt, "platoon time step")->capture_default_str();
  app.add_option("--delays", src.delays, "random: delay list")->delimiter(',')->capture_default_str();
  app.add_option("--margin", src.margin, "random: 1 - spectral radius")->capture_default_str();
  app.add_option("--seed", src.seed, "random: generator seed")->capture_default_str();
  app.add_option("--inputs", src.inputs, "random: input count")->capture_default_str();
  app.add_option("--outputs", src.outputs, "random: output count")->capture_default_str();
}

ModelRecord load_source(const SystemSource& src) {
  if (!src.path.empty() && !src.benchmark.empty()) {
    throw ArgumentError("give either --system or --benchmark, not both");
  }
  if (!src.path.empty()) return load_model(src.path);
  if (src.benchmark.empty()) throw ArgumentError("a --system file or a --benchmark is required");
  Benchmark b;
  if (src.benchmark == "platoon") {
    b = gen_platoon(src.size > 0 ? src.size : 512, src.dt);
  } else if (src.benchmark == "convdiff") {
    b = gen_convdiff(src.size > 0 ? src.size : 25);
  } else if (src.benchmark == "rod") {
    b = gen_rod(src.size > 0 ? src.size : 1500);
  } else {
    RandomSpec spec;
    spec.n = src.size > 0 ? src.size : 10;
    spec.delays = src.delays;
    spec.seed = src.seed;
    spec.margin = src.margin;
    spec.inputs = src.inputs;
    spec.outputs = src.outputs;
    b = gen_random_stable(spec);
  }
  return make_record(b.name, b.system, b.init);
}

nlohmann::json source_json(const SystemSource& src) {
  if (!src.path.empty()) return {{"system", src.path}};
  return {{"benchmark", src.benchmark}, {"size", src.size},     {"dt", src.dt},
          {"delays", src.delays},       {"margin", src.margin}, {"seed", src.seed},
          {"inputs", src.inputs},       {"outputs", src.outputs}};
}

void emit(const std::string& path, const std::string& contents) {
  if (path.empty() || path == "-") {
    std::cout << contents;
  } else {
    write_file_atomic(path, contents);
  }
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  for (Eigen::Index i = 0; i < traj.outputs.rows(); ++i) out += ",y_" + std::to_string(i + 1);
  out += '\n';
  for (Eigen::Index t = 0; t < traj.outputs.cols(); ++t) {
    out += std::to_string(t);
    for (Eigen::Index i = 0; i < traj.outputs.rows(); ++i) {
      out += "," + format_number(traj.outputs(i, t));
    }
    out += '\n';
  }
  return out;
}

std::string trajectory_json(const Trajectory& traj) {
  nlohmann::json j;
  j["input"] = traj.input_description;
  j["horizon"] = traj.horizon();
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < traj.outputs.rows(); ++i) {
    std::vector<double> row(traj.outputs.cols());
    for (Eigen::Index t = 0; t < traj.outputs.cols(); ++t) row[t] = traj.outputs(i, t);
    rows.push_back(row);
  }
  j["outputs"] = rows;
  return j.dump(2) + "\n";
}

struct ReduceArgs {
  SystemSource source;
  std::string method = "combbt";
  std::optional<int> order;
  int walsh_n = 16;
  int laguerre_k = 40;
  double discount = 0.81;
  std::string input = "zero";
  std::string out;
  std::string report;
  std::string encoding = "binary";
  std::optional<double> rank_tol;
  std::string equation = "pointwise";
  std::string laguerre_system = "exact";
  long lifted_cap = 4096;
  bool skip_stability = false;
};

nlohmann::json info_json(const ReducedSystem& red) {
  nlohmann::json j;
  j["method"] = method_name(red.method);
  j["r"] = red.order();
  j["parameters"] = red.info.parameters;
  j["diagnostics"] = red.info.diagnostics;
  j["singular_values"] = red.info.singular_values;
  nlohmann::json phases = nlohmann::json::array();
  for (const auto& [name, seconds] : red.info.phase_seconds) {
    phases.push_back({{"phase", name}, {"seconds", seconds}});
  }
  j["phase_seconds"] = phases;
  j["warnings"] = red.info.warnings;
  return j;
}

int cmd_reduce(const ReduceArgs& a) {
  const ModelRecord full = load_source(a.source);
  if (full.reduced) throw ArgumentError("reduce expects a full system, got a reduced model");
  const Method method = parse_method(a.method);
  const auto need_order = [&]() {
    if (!a.order) throw ArgumentError("--order is required for method " + a.method);
    return *a.order;
  };
  ReducedSystem red;
  const auto start = std::chrono::steady_clock::now();
  if (method == Method::walsh || method == Method::lifted_walsh) {
    const InputSignal input = parse_input(a.input, full.system.inputs());
    WalshSolveOptions solve;
    solve.equation = parse_equation(a.equation);
    if (method == Method::walsh) {
      red = reduce_walsh(full.system, full.init, input, a.walsh_n,
                         {solve, a.rank_tol, !a.skip_stability});
    } else {
      red = reduce_lifted_walsh(full.system, full.init, input, a.walsh_n,
                                {solve, a.rank_tol, a.lifted_cap});
    }
  } else {
    BtOptions opts;
    opts.K = a.laguerre_k;
    opts.s = a.discount;
    opts.laguerre.form = parse_laguerre_system(a.laguerre_system);
    opts.check_stability = !a.skip_stability;
    const int r = need_order();
    if (method == Method::combbt) {
      red = reduce_combbt(full.system, full.init, r, opts);
    } else if (method == Method::grambt) {
      red = reduce_grambt(full.system, full.init, r, opts);
    } else {
      red = reduce_dominant(full.system, full.init, r, opts);
    }
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!a.out.empty()) {
    ModelRecord record = make_record(red);
    record.name = full.name + "-" + method_name(method);
    save_model(a.out, record, parse_format(a.encoding));
  }
  nlohmann::json report;
  report["command"] = "reduce";
  report["arguments"] = {{"source", source_json(a.source)},
                         {"method", a.method},
                         {"order", a.order ? nlohmann::json(*a.order) : nlohmann::json(nullptr)},
                         {"walsh_N", a.walsh_n},
                         {"laguerre_K", a.laguerre_k},
                         {"discount", a.discount},
                         {"input", a.input},
                         {"rank_tol", a.rank_tol ? nlohmann::json(*a.rank_tol) : nlohmann::json(nullptr)},
                         {"equation", a.equation},
                         {"laguerre_system", a.laguerre_system},
                         {"lifted_cap", a.lifted_cap},
                         {"skip_stability", a.skip_stability},
                         {"out", a.out},
                         {"encoding", a.encoding}};
  report["full"] = {{"name", full.name},
                    {"n", full.system.states()},
                    {"m", full.system.inputs()},
                    {"p", full.system.outputs()},
                    {"max_delay", full.system.max_delay()}};
  report["result"] = info_json(red);
  report["result"]["total_seconds"] = total;
  emit(a.report, report.dump(2) + "\n");
  return ok;
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return argument_error;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return io_error;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return capacity_error;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return numerical_error;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return numerical_error;
  } catch (const std::bad_alloc&) {
    std::cerr << "capacity error: out of memory\n";
    return capacity_error;
  }
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Model order reduction for discrete time-delay systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tdsmor 1.0");

  // generate
  SystemSource gen_source;
  std::string gen_out, gen_encoding = "binary";
  auto* generate = app.add_subcommand("generate", "Write a benchmark system to a model file");
  add_source_options(*generate, gen_source, false);
  generate->add_option("--out", gen_out, "Output model file")->required();
  generate->add_option("--format", gen_encoding, "binary or json")->capture_default_str();

  // reduce
  ReduceArgs red;
  auto* reduce = app.add_subcommand("reduce", "Reduce a system and write the reduced model");
  add_source_options(*reduce, red.source, true);
  reduce->add_option("--method", red.method, "walsh, combbt, grambt, dominant or lifted-walsh")
      ->capture_default_str();
  reduce->add_option("--order", red.order, "Reduced order r (balanced truncation and dominant)");
  reduce->add_option("--walsh-N", red.walsh_n, "Walsh order N (power of two)")->capture_default_str();
  reduce->add_option("--laguerre-K", red.laguerre_k, "Laguerre terms K")->capture_default_str();
  reduce->add_option("--discount", red.discount, "Laguerre discount s in (0, 1)")->capture_default_str();
  reduce->add_option("--input", red.input, "Input descriptor used by the Walsh methods")
      ->capture_default_str();
  reduce->add_option("--rank-tol", red.rank_tol, "Relative rank tolerance for the Walsh basis");
  reduce->add_option("--equation", red.equation, "Walsh equation: pointwise or terminal")
      ->capture_default_str();
  reduce->add_option("--laguerre-system", red.laguerre_system, "exact or basis_shift")
      ->capture_default_str();
  reduce->add_option("--lifted-cap", red.lifted_cap, "Largest lifted dimension for lifted-walsh")
      ->capture_default_str();
  reduce->add_flag("--skip-stability", red.skip_stability, "Skip the full and reduced stability checks");
  reduce->add_option("--out", red.out, "Reduced model file");
  reduce->add_option("--report", red.report, "JSON report path (stdout when omitted)");
  reduce->add_option("--format", red.encoding, "Model file format: binary or json")
      ->capture_default_str();

  // simulate
  SystemSource sim_source;
  std::string sim_input = "zero", sim_out, sim_format = "csv";
  long sim_horizon = 100;
  auto* sim = app.add_subcommand("simulate", "Simulate a full or reduced model");
  add_source_options(*sim, sim_source, true);
  sim->add_option("--input", sim_input, "Input descriptor")->capture_default_str();
  sim->add_option("--horizon", sim_horizon, "Final step T")->capture_default_str()->check(
      CLI::PositiveNumber);
  sim->add_option("--out", sim_out, "Output path (stdout when omitted)");
  sim->add_option("--format", sim_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  // compare
  SystemSource cmp_source;
  std::vector<std::string> cmp_reduced;
  std::string cmp_input = "zero", cmp_out, cmp_summary, cmp_format = "csv";
  long cmp_horizon = 100;
  auto* cmp = app.add_subcommand("compare", "Compare reduced models against the full system");
  add_source_options(*cmp, cmp_source, true);
  cmp->add_option("--reduced", cmp_reduced, "Reduced model file (repeatable)")->required();
  cmp->add_option("--input", cmp_input, "Input descriptor")->capture_default_str();
  cmp->add_option("--horizon", cmp_horizon, "Final step T")->capture_default_str()->check(
      CLI::PositiveNumber);
  cmp->add_option("--out", cmp_out, "Output path for --format (stdout when omitted)");
  cmp->add_option("--summary", cmp_summary, "Additional JSON summary path");
  cmp->add_option("--format", cmp_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  // selftest
  std::optional<double> fault;
  auto* selftest = app.add_subcommand("selftest", "Run the invariant suites at small sizes");
  selftest->add_option("--inject-fault", fault,
                       "Perturb S(0,0) by this amount (fault-injection builds only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : argument_error;
  }

  if (*generate) {
    return run_guarded([&] {
      const ModelRecord record = load_source(gen_source);
      save_model(gen_out, record, parse_format(gen_encoding));
      std::cerr << "wrote " << record.name << " (n=" << record.system.states()
                << ", m=" << record.system.inputs() << ", p=" << record.system.outputs()
                << ", delays=" << record.system.delayed().size() << ") to " << gen_out << "\n";
      return ok;
    });
  }
  if (*reduce) return run_guarded([&] { return cmd_reduce(red); });
  if (*sim) {
    return run_guarded([&] {
      const ModelRecord record = load_source(sim_source);
      const InputSignal input = parse_input(sim_input, record.system.inputs());
      const Trajectory traj = simulate(record.system, record.init, input, sim_horizon);
      emit(sim_out, sim_format == "csv" ? trajectory_csv(traj) : trajectory_json(traj));
      return ok;
    });
  }
  if (*cmp) {
    return run_guarded([&] {
      const ModelRecord full = load_source(cmp_source);
      std::vector<ReducedSystem> models;
      std::vector<std::string> labels;
      for (const auto& path : cmp_reduced) {
        const ModelRecord rec = load_model(path);
        if (!rec.reduced) throw ArgumentError(path + " is not a reduced model");
        models.push_back(to_reduced(rec));
        std::string label = method_name(rec.method) + "_r" + std::to_string(rec.system.states());
        int suffix = 2;
        const std::string base = label;
        while (std::find(labels.begin(), labels.end(), label) != labels.end()) {
          label = base + "_" + std::to_string(suffix++);
        }
        labels.push_back(label);
      }
      const InputSignal input = parse_input(cmp_input, full.system.inputs());
      const Comparison comparison =
          compare_models(full.system, full.init, models, labels, input, cmp_horizon);
      const std::string summary = comparison_json(comparison, cmp_input);
      emit(cmp_out, cmp_format == "csv" ? comparison_csv(comparison) : summary);
      if (!cmp_summary.empty()) write_file_atomic(cmp_summary, summary);
      return ok;
    });
  }
  if (*selftest) {
    return run_guarded([&] {
      if (fault) {
        if (!fault::available()) {
          throw ArgumentError("--inject-fault needs a build with TDSMOR_FAULT_INJECTION");
        }
        fault::set_summation_perturbation(*fault);
      }
      const SelftestReport report = run_selftest();
      for (const auto& check : report.checks) {
        std::cout << (check.passed ? "PASS " : "FAIL ") << check.name << ": " << check.detail
                  << " (" << check.seconds << " s)\n";
      }
      std::cout << (report.passed() ? "selftest passed" : "selftest FAILED") << "\n";
      return report.passed() ? ok : selftest_failed;
    });
  }
  return argument_error;
}

}  // namespace tdsmor::cli
