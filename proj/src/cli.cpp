#include "sl1/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "sl1/analysis.hpp"
#include "sl1/conditions.hpp"
#include "sl1/generators.hpp"
#include "sl1/io.hpp"
#include "sl1/parallel.hpp"
#include "sl1/solver.hpp"

namespace sl1::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Failure that maps to a specific exit code.
struct Exit : std::runtime_error {
  int code;
  Exit(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

json load_config_file(const std::string& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw Exit(kInvalidArgs, path + ": not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw Exit(kInvalidArgs, path + ": config must be a JSON object");
  if (j.contains("config")) return j.at("config");
  return j;
}

json object_or_empty(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return json::object();
  return j.at(key);
}

std::string required_string(const json& j, const char* key, const std::string& command) {
  if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
    throw std::invalid_argument(command + ": missing required setting '" + key + "'");
  }
  return j.at(key).get<std::string>();
}

json optional_path(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return nullptr;
  return j.at(key).get<std::string>();
}

json lemma_defaults(const json& j) {
  LemmaBoundInputs d;
  return {{"C", j.value("C", d.C)}, {"c", j.value("c", d.c)}, {"delta", j.value("delta", 0.1)}};
}

json montecarlo_defaults(const json& j) {
  return {{"trials", j.value("trials", std::size_t{0})},
          {"samples_per_trial", j.value("samples_per_trial", std::size_t{1000})},
          {"delta", j.value("delta", 0.1)}};
}

}  // namespace

json resolve_config(const std::string& command, const json& file, const json& overrides) {
  json merged = file.is_null() ? json::object() : file;
  merged.merge_patch(overrides);
  json out = {{"command", command}, {"spec_revision", kFormatRevision}};
  if (command == "gen") {
    if (!merged.contains("instance")) throw std::invalid_argument("gen: missing 'instance' (N, M, K)");
    const json& ij = merged.at("instance");
    for (const char* key : {"N", "M", "K"}) {
      if (!ij.contains(key)) throw std::invalid_argument(std::string("gen: missing required setting '") + key + "'");
    }
    out["instance"] = to_json(instance_spec_from_json(ij));
    out["rng"] = to_json(rng_spec_from_json(merged.value("rng", json{{"seed", 0}})));
  } else if (command == "solve") {
    out["bundle"] = required_string(merged, "bundle", command);
    out["solver"] = to_json(solver_config_from_json(object_or_empty(merged, "solver")));
  } else if (command == "conditions") {
    out["matrix"] = required_string(merged, "matrix", command);
    if (!merged.contains("K")) throw std::invalid_argument("conditions: missing required setting 'K'");
    out["K"] = merged.at("K").get<std::size_t>();
    out["nu"] = merged.value("nu", kNuGaussian);
    out["budget"] = to_json(estimation_budget_from_json(object_or_empty(merged, "budget")));
    out["rng"] = to_json(rng_spec_from_json(merged.value("rng", json{{"seed", 0}})));
    out["lemma"] = lemma_defaults(object_or_empty(merged, "lemma"));
    out["montecarlo"] = montecarlo_defaults(object_or_empty(merged, "montecarlo"));
  } else if (command == "trace") {
    out["bundle"] = required_string(merged, "bundle", command);
    out["result"] = optional_path(merged, "result");
    out["conditions"] = optional_path(merged, "conditions");
    out["solver"] = to_json(solver_config_from_json(object_or_empty(merged, "solver")));
    out["budget"] = to_json(estimation_budget_from_json(object_or_empty(merged, "budget")));
    out["rng"] = to_json(rng_spec_from_json(merged.value("rng", json{{"seed", 0}})));
    out["nu"] = merged.value("nu", kNuGaussian);
  } else if (command == "grid") {
    out["grid"] = to_json(grid_spec_from_json(object_or_empty(merged, "grid")));
  } else {
    throw std::invalid_argument("unknown command '" + command + "'");
  }
  return out;
}

namespace {

void write_json(const std::optional<std::string>& out, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (out) {
    io::atomic_write_file(*out, text);
  } else {
    std::cout << text;
  }
}

DenseMatrix load_matrix(const std::string& path) {
  if (fs::is_directory(path)) return read_bundle(path).instance.phi;
  return io::read_matrix(path);
}

int cmd_gen(const json& cfg, const std::optional<std::string>& out) {
  if (!out) throw std::invalid_argument("gen: --out <dir> is required");
  const InstanceSpec spec = instance_spec_from_json(cfg.at("instance"));
  const RngSpec rng = rng_spec_from_json(cfg.at("rng"));
  const SparseInstance inst = make_instance(spec, rng);
  json meta = bundle_meta(inst, spec, rng);
  meta["config"] = cfg;
  write_bundle(*out, inst, meta);
  return kOk;
}

int cmd_solve(const json& cfg, const std::optional<std::string>& out) {
  const std::string dir = cfg.at("bundle").get<std::string>();
  const Bundle b = read_bundle(dir);
  const SolverConfig sc = solver_config_from_json(cfg.at("solver"));
  const SolverResult r = solve(b.instance.phi, b.instance.y, b.instance.epsilon, sc);
  json j = to_json(r);
  j["config"] = cfg;
  write_json(out ? out : std::optional<std::string>((fs::path(dir) / "result.json").string()), j);
  if (!is_feasible_status(r.status)) {
    std::cerr << "sl1 solve: solver stopped with status " << to_string(r.status) << "\n";
    return kNotConverged;
  }
  return kOk;
}

int cmd_conditions(const json& cfg, const std::optional<std::string>& out, std::size_t threads) {
  const DenseMatrix phi = load_matrix(cfg.at("matrix").get<std::string>());
  const std::size_t k = cfg.at("K").get<std::size_t>();
  EstimationBudget budget = estimation_budget_from_json(cfg.at("budget"));
  budget.threads = threads;
  const RngSpec rng = rng_spec_from_json(cfg.at("rng"));
  const ConditionEstimate est = estimate_conditions(phi, k, budget, rng, cfg.at("nu").get<double>());

  json j = {{"config", cfg}, {"estimate", to_json(est)}, {"verdict", to_string(theorem_condition_holds(est))}};
  const json& lc = cfg.at("lemma");
  LemmaBoundInputs li{lc.at("C").get<double>(), lc.at("c").get<double>(), lc.at("delta").get<double>(), k,
                      phi.cols()};
  j["lemma"] = {{"C", li.C},
                {"c", li.c},
                {"delta", li.delta},
                {"sample_bound", lemma_sample_bound(li)},
                {"probability_bound", lemma_probability_bound(li.c, li.delta, phi.rows())},
                {"note", "C and c are placeholders for unspecified universal constants"}};
  const json& mc = cfg.at("montecarlo");
  const std::size_t trials = mc.at("trials").get<std::size_t>();
  if (trials > 0) {
    j["montecarlo"] = to_json(montecarlo_lemma_check(phi.cols(), phi.rows(), k, mc.at("delta").get<double>(), trials,
                                                     mc.at("samples_per_trial").get<std::size_t>(), rng.child(7),
                                                     threads));
  }
  write_json(out, j);
  return kOk;
}

int cmd_trace(const json& cfg, const std::optional<std::string>& out, std::size_t threads) {
  const Bundle b = read_bundle(cfg.at("bundle").get<std::string>());
  const SolverConfig sc = solver_config_from_json(cfg.at("solver"));
  SolverResult r;
  if (cfg.at("result").is_string()) {
    const std::string path = cfg.at("result").get<std::string>();
    try {
      r = solver_result_from_json(json::parse(io::read_file(path)));
    } catch (const json::exception& e) {
      throw io::FormatError(path + ": " + e.what());
    }
  } else {
    r = solve(b.instance.phi, b.instance.y, b.instance.epsilon, sc);
  }
  if (!is_feasible_status(r.status)) {
    throw Exit(kNotConverged, "trace: solver status " + to_string(r.status) + " is not feasible");
  }
  ConditionEstimate est;
  if (cfg.at("conditions").is_string()) {
    const std::string path = cfg.at("conditions").get<std::string>();
    try {
      const json cj = json::parse(io::read_file(path));
      est = condition_estimate_from_json(cj.contains("estimate") ? cj.at("estimate") : cj);
    } catch (const json::exception& e) {
      throw io::FormatError(path + ": " + e.what());
    }
  } else {
    EstimationBudget budget = estimation_budget_from_json(cfg.at("budget"));
    budget.threads = threads;
    est = estimate_conditions(b.instance.phi, b.instance.k, budget, rng_spec_from_json(cfg.at("rng")),
                              cfg.at("nu").get<double>());
  }
  const ProofTrace t = trace_proof(b.instance, r, est, sc.feasibility_tol);
  json j = {{"config", cfg},
            {"solver_status", to_string(r.status)},
            {"objective", r.objective},
            {"estimate", to_json(est)},
            {"trace", to_json(t)}};
  write_json(out, j);
  return kOk;
}

int cmd_grid(const json& cfg, const std::optional<std::string>& out, std::size_t threads, bool timing) {
  if (!out) throw std::invalid_argument("grid: --out <dir> is required");
  GridSpec g = grid_spec_from_json(cfg.at("grid"));
  g.threads = threads;
  g.record_timing = g.record_timing || timing;
  const GridResult res = run_grid(g);
  json cells = json::array();
  for (const auto& c : res.cells) cells.push_back(to_json(c));
  const json summary = {{"config", cfg},
                        {"observational", true},
                        {"note", "bound rates are empirical; the matrix condition is not certified at these sizes"},
                        {"cells", cells}};
  fs::create_directories(*out);
  io::atomic_write_file(fs::path(*out) / "trials.csv", trials_csv(res.trials));
  io::atomic_write_file(fs::path(*out) / "summary.json", summary.dump(2) + "\n");
  return kOk;
}

template <typename T>
CLI::Option* flag(CLI::App* app, json& ov, const std::string& name, const std::string& pointer,
                  const std::string& help) {
  return app->add_option_function<T>(
      name, [&ov, pointer](const T& v) { ov[json::json_pointer(pointer)] = v; }, help);
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Sparse recovery with an l1 fidelity constraint: generate, solve, check conditions, trace, grid"};
  app.require_subcommand(1);
  std::optional<std::string> config_path, out;
  std::size_t threads = default_threads();
  bool timing = false;
  json ov = json::object();

  auto common = [&](CLI::App* sub) {
    sub->add_option_function<std::string>("--config", [&](const std::string& p) { config_path = p; },
                                          "JSON config file (or any output of this tool)");
    sub->add_option_function<std::string>("--out", [&](const std::string& p) { out = p; }, "output path");
    sub->add_option("--threads", threads, "worker threads (default: SL1_THREADS or 1)")->check(CLI::PositiveNumber);
  };
  auto solver_flags = [&](CLI::App* sub, const std::string& prefix) {
    flag<std::string>(sub, ov, "--method", prefix + "/method", "lp-exact or first-order");
    flag<double>(sub, ov, "--feas-tol", prefix + "/feasibility_tol", "feasibility tolerance");
    flag<double>(sub, ov, "--obj-tol", prefix + "/objective_tol", "relative objective tolerance");
    flag<std::size_t>(sub, ov, "--max-iters", prefix + "/max_iters", "iteration / pivot limit");
    flag<std::size_t>(sub, ov, "--window", prefix + "/window", "first-order check window");
  };
  auto budget_flags = [&](CLI::App* sub) {
    flag<std::size_t>(sub, ov, "--samples", "/budget/samples", "random supports (0 disables estimation)");
    flag<std::size_t>(sub, ov, "--restarts", "/budget/restarts", "starting directions per support");
    flag<std::size_t>(sub, ov, "--ascent-iters", "/budget/ascent_iters", "local ascent iterations");
    flag<std::size_t>(sub, ov, "--exhaustive-cap", "/budget/exhaustive_cap", "enumerate supports up to this count");
    flag<std::string>(sub, ov, "--refinement", "/budget/refinement", "none or local-ascent");
    flag<std::uint64_t>(sub, ov, "--seed", "/rng/seed", "seed");
    flag<std::uint64_t>(sub, ov, "--stream", "/rng/stream", "stream");
    flag<double>(sub, ov, "--nu", "/nu", "nu (default sqrt(2/pi))");
  };
  auto noise_signal_flags = [&](CLI::App* sub, const std::string& prefix) {
    flag<std::string>(sub, ov, "--signal", prefix + "/signal/kind", "sparse or compressible");
    flag<std::string>(sub, ov, "--amplitude", prefix + "/signal/amplitude", "unit, gaussian or uniform");
    flag<double>(sub, ov, "--amp-a", prefix + "/signal/amplitude_a", "uniform amplitude lower end");
    flag<double>(sub, ov, "--amp-b", prefix + "/signal/amplitude_b", "uniform amplitude upper end");
    flag<double>(sub, ov, "--decay", prefix + "/signal/decay", "compressible decay exponent");
    flag<std::string>(sub, ov, "--noise", prefix + "/noise/kind", "none, sparse or laplacian");
    flag<double>(sub, ov, "--eps", prefix + "/noise/epsilon", "sparse noise l1 budget");
    flag<double>(sub, ov, "--quantile", prefix + "/noise/quantile", "laplacian epsilon quantile level");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate an instance bundle");
  common(gen);
  flag<std::size_t>(gen, ov, "--N", "/instance/N", "signal length");
  flag<std::size_t>(gen, ov, "--M", "/instance/M", "measurements");
  flag<std::size_t>(gen, ov, "--K", "/instance/K", "sparsity");
  flag<std::size_t>(gen, ov, "--s", "/instance/noise/s", "corrupted measurements (sparse noise)");
  noise_signal_flags(gen, "/instance");
  flag<std::uint64_t>(gen, ov, "--seed", "/rng/seed", "seed");
  flag<std::uint64_t>(gen, ov, "--stream", "/rng/stream", "stream");

  CLI::App* slv = app.add_subcommand("solve", "solve the instance in a bundle");
  common(slv);
  flag<std::string>(slv, ov, "--bundle", "/bundle", "bundle directory");
  solver_flags(slv, "/solver");

  CLI::App* cnd = app.add_subcommand("conditions", "estimate the matrix conditions");
  common(cnd);
  flag<std::string>(cnd, ov, "--matrix", "/matrix", "matrix file (.bin or CSV) or bundle directory");
  flag<std::size_t>(cnd, ov, "--K", "/K", "sparsity");
  budget_flags(cnd);
  flag<double>(cnd, ov, "--lemma-C", "/lemma/C", "sample-bound constant C");
  flag<double>(cnd, ov, "--lemma-c", "/lemma/c", "probability-bound constant c");
  flag<double>(cnd, ov, "--lemma-delta", "/lemma/delta", "lemma delta");
  flag<std::size_t>(cnd, ov, "--mc-trials", "/montecarlo/trials", "Monte-Carlo trials (0: skip)");
  flag<std::size_t>(cnd, ov, "--mc-samples", "/montecarlo/samples_per_trial", "Monte-Carlo samples per trial");
  flag<double>(cnd, ov, "--mc-delta", "/montecarlo/delta", "Monte-Carlo violation threshold");

  CLI::App* trc = app.add_subcommand("trace", "trace the proof inequalities on a solved instance");
  common(trc);
  flag<std::string>(trc, ov, "--bundle", "/bundle", "bundle directory");
  flag<std::string>(trc, ov, "--result", "/result", "solve output (default: solve now)");
  flag<std::string>(trc, ov, "--conditions", "/conditions", "conditions output (default: estimate now)");
  solver_flags(trc, "/solver");
  budget_flags(trc);

  CLI::App* grd = app.add_subcommand("grid", "run a trial grid");
  common(grd);
  flag<std::size_t>(grd, ov, "--N", "/grid/N", "signal length");
  flag<std::vector<std::size_t>>(grd, ov, "--M", "/grid/M", "measurement counts")->delimiter(',');
  flag<std::vector<std::size_t>>(grd, ov, "--K", "/grid/K", "sparsities")->delimiter(',');
  flag<std::vector<std::size_t>>(grd, ov, "--s", "/grid/s", "corrupted-measurement counts")->delimiter(',');
  flag<std::size_t>(grd, ov, "--trials", "/grid/trials", "trials per cell");
  flag<std::uint64_t>(grd, ov, "--seed", "/grid/seed", "base seed");
  noise_signal_flags(grd, "/grid");
  solver_flags(grd, "/grid/solver");
  grd->add_flag("--record-timing", timing, "fill runtime_ms (makes output run-dependent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidArgs;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    const json file = config_path ? load_config_file(*config_path) : json::object();
    if (file.contains("command") && file.at("command") != command) {
      throw std::invalid_argument("config is for command '" + file.at("command").get<std::string>() + "', not '" +
                                  command + "'");
    }
    const json cfg = resolve_config(command, file, ov);
    if (command == "gen") return cmd_gen(cfg, out);
    if (command == "solve") return cmd_solve(cfg, out);
    if (command == "conditions") return cmd_conditions(cfg, out, threads);
    if (command == "trace") return cmd_trace(cfg, out, threads);
    if (command == "grid") return cmd_grid(cfg, out, threads, timing);
    return kInvalidArgs;
  } catch (const Exit& e) {
    std::cerr << "sl1 " << command << ": " << e.what() << "\n";
    return e.code;
  } catch (const io::IoError& e) {
    std::cerr << "sl1 " << command << ": " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "sl1 " << command << ": " << e.what() << "\n";
    return kIoError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "sl1 " << command << ": " << e.what() << "\n";
    return kInvalidArgs;
  } catch (const json::exception& e) {
    std::cerr << "sl1 " << command << ": bad config value: " << e.what() << "\n";
    return kInvalidArgs;
  } catch (const std::exception& e) {
    std::cerr << "sl1 " << command << ": " << e.what() << "\n";
    return kIoError;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("sl1");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(storage.size()), argv.data());
}

}  // namespace sl1::cli
