#include "hjbpinn/cli.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hjbpinn/bounds.hpp"
#include "hjbpinn/config.hpp"
#include "hjbpinn/data.hpp"
#include "hjbpinn/experiment.hpp"
#include "hjbpinn/io.hpp"
#include "hjbpinn/kernels.hpp"
#include "hjbpinn/rng.hpp"
#include "hjbpinn/trainer.hpp"
#include "hjbpinn/verify.hpp"

#ifndef HJBPINN_VERSION
#define HJBPINN_VERSION "0.0.0"
#endif

namespace hjbpinn::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kManifest = "manifest.json";

// Collects the artifacts of one command.
struct Context {
  std::optional<fs::path> out;
  std::vector<std::string> outputs;
  std::vector<std::uint64_t> seeds;
  std::ostream* report = nullptr;

  void write(const std::string& rel, const std::string& contents) {
    if (!out) return;
    write_file_atomic(*out / rel, contents);
    outputs.push_back(rel);
  }
  void note_output(const std::string& rel) { outputs.push_back(rel); }
};

using Action = std::function<int(Context&)>;

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Integer config value checked against [lo, hi].
std::int64_t get_ranged(Config& c, const std::string& key, std::int64_t def, std::int64_t lo, std::int64_t hi) {
  const std::int64_t v = c.get_int(key, def);
  if (v < lo || v > hi) {
    throw ConfigError("'" + key + "' must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return v;
}

std::size_t get_count(Config& c, const std::string& key, std::int64_t def) {
  return static_cast<std::size_t>(get_ranged(c, key, def, 0, std::int64_t{1} << 40));
}

HjbProblem read_problem(Config& c) {
  const int n = static_cast<int>(get_ranged(c, "n", 2, 1, 100000));
  const std::string domain = c.get_string("domain", "unit_cube");
  HjbProblem p;
  if (domain == "unit_cube") {
    p = unit_cube_problem(n);
    p.T = c.get_double("T", 1.0);
  } else if (domain == "symmetric") {
    const double B = c.get_double("B", 1.0);
    p = symmetric_problem(n, B, c.get_double("T", 1.0));
  } else {
    throw ConfigError("'domain' must be unit_cube or symmetric");
  }
  if (c.get_string("g", "quadratic") != "quadratic") throw ConfigError("'g' supports only quadratic");
  validate(p);
  return p;
}

ActivationKind read_activation(Config& c) { return parse_activation(c.get_string("activation", "tanh")); }

LossWeights read_weights(Config& c) {
  LossWeights w;
  w.lambda0 = c.get_double("lambda0", w.lambda0);
  w.lambdas = c.get_double("lambdas", w.lambdas);
  validate(w);
  return w;
}

TrainConfig read_train(Config& c, TrainConfig t) {
  t.steps = static_cast<int>(get_ranged(c, "steps", t.steps, 0, 100000000));
  t.lr = c.get_double("lr", t.lr);
  t.adam_beta1 = c.get_double("adam_beta1", t.adam_beta1);
  t.adam_beta2 = c.get_double("adam_beta2", t.adam_beta2);
  t.adam_eps = c.get_double("adam_eps", t.adam_eps);
  t.record_every = static_cast<int>(get_ranged(c, "record_every", t.record_every, 1, 100000000));
  t.project_ball = c.get_bool("project_ball", t.project_ball);
  const std::string form = c.get_string("form", "supervised");
  if (form == "supervised") {
    t.form = RiskForm::Supervised;
  } else if (form == "unsupervised") {
    t.form = RiskForm::Unsupervised;
  } else {
    throw ConfigError("'form' must be supervised or unsupervised");
  }
  validate(t);
  return t;
}

SweepConfig preset_config(Config& c) {
  const std::string preset = c.get_string("preset", "desk");
  if (preset == "desk") return desk_preset();
  if (preset == "paper") return paper_preset();
  throw ConfigError("'preset' must be desk or paper");
}

// ---------------------------------------------------------------- bounds

Action prepare_bounds(Config& c) {
  BoundInputs in;
  in.n = static_cast<int>(get_ranged(c, "n", in.n, 1, 100000000));
  in.k = get_ranged(c, "k", in.k, 1, std::int64_t{1} << 40);
  in.W = c.get_double("W", in.W);
  in.B = c.get_double("B", in.B);
  in.T = c.get_double("T", in.T);
  in.M = c.get_double("M", in.M);
  in.G = c.get_double("G", in.G);
  in.lambda0 = c.get_double("lambda0", in.lambda0);
  in.lambdas = c.get_double("lambdas", in.lambdas);
  in.sigma2 = c.get_double("sigma2", in.sigma2);
  in.eta = c.get_double("eta", in.eta);
  in.delta = c.get_double("delta", in.delta);
  in.s = c.get_optional_double("s");
  in.N_s = c.get_double("N_s", in.N_s);
  in.N_0 = c.get_double("N_0", in.N_0);
  const ActivationKind act = read_activation(c);
  const std::uint64_t seed = c.get_u64("seed", 1);
  const auto C1 = c.get_optional_double("C1");
  const auto C2 = c.get_optional_double("C2");
  const auto C3 = c.get_optional_double("C3");
  if (C1 || C2 || C3) {
    if (!(C1 && C2 && C3)) throw ConfigError("C1, C2 and C3 must be given together");
    in.C1 = *C1;
    in.C2 = *C2;
    in.C3 = *C3;
  } else {
    // Constants of the outer vector the trainer would draw for this (k, n, seed).
    if (in.k > 1000000) throw ConfigError("give C1, C2, C3 explicitly for k > 1e6");
    const NetworkParams p = init_network(static_cast<int>(in.k), in.n, seed, act);
    in = with_constants(in, bound_constants(act, p.a));
  }
  return [in, seed](Context& ctx) {
    ctx.seeds = {seed};
    json j;
    j["inputs"] = to_json(in);
    j["supervised"] = to_json(supervised_report(in));
    j["unsupervised"] = to_json(unsupervised_report(in));
    j["manifest"] = kManifest;
    const std::string text = dump(j);
    *ctx.report << text;
    ctx.write("bounds.json", text);
    return kExitOk;
  };
}

// ---------------------------------------------------------------- train

Action prepare_train(Config& c) {
  const SweepConfig base = preset_config(c);
  const HjbProblem problem = read_problem(c);
  const std::uint64_t seed = c.get_u64("seed", 1);
  const std::uint64_t data_seed = c.get_u64("data_seed", seed);
  const int k = static_cast<int>(get_ranged(c, "k", 8, 1, 1 << 20));
  const ActivationKind act = read_activation(c);
  const double radius = c.get_double("radius", 0.0);
  const double sigma2 = c.get_double("sigma2", base.sigma2);
  const NoiseKind noise = parse_noise_kind(c.get_string("noise", std::string(to_string(base.noise))));
  const std::size_t N_r = get_count(c, "N_r", static_cast<std::int64_t>(base.N_r));
  const std::size_t N_0 = get_count(c, "N_0", static_cast<std::int64_t>(base.N_0));
  const std::size_t N_s = get_count(c, "N_s", static_cast<std::int64_t>(base.N_s));
  const LossWeights weights = read_weights(c);
  const TrainConfig tc = read_train(c, base.train);
  return [=](Context& ctx) {
    ctx.seeds = {seed, data_seed};
    const Dataset data = sample_dataset(problem, N_r, N_0, N_s, sigma2, noise, data_seed);
    const NetworkParams p0 = init_network(k, problem.n, seed, act, radius);
    std::ostringstream ds;
    write_jsonl(data, ds);
    ctx.write("dataset.jsonl", ds.str());
    ctx.write("network_init.json", dump(to_json(p0)));
    TrainTrace trace;
    int code = kExitOk;
    std::string failure;
    try {
      trace = train(p0, data, weights, tc);
    } catch (const TrainingDiverged& e) {
      trace = e.trace();
      failure = e.what();
      code = kExitError;
    }
    std::ostringstream tr;
    write_trace_csv(trace, tr);
    ctx.write("trace.csv", tr.str());
    json result;
    result["k"] = k;
    result["d_N"] = p0.d_N();
    result["sigma2"] = sigma2;
    result["M"] = data.M;
    result["G"] = data.G;
    if (code == kExitOk) {
      const TracePoint& last = trace.points.back();
      ctx.write("network_final.json", dump(to_json(trace.final_params)));
      result["status"] = "ok";
      result["final"] = {{"pde_term", last.risk.pde},
                         {"init_term", last.risk.init},
                         {"sup_term", last.risk.sup},
                         {"total", last.risk.total},
                         {"accuracy", last.accuracy}};
      result["crossed_sigma2"] = last.risk.total < sigma2;
    } else {
      result["status"] = "failed";
      result["error"] = failure;
    }
    result["manifest"] = kManifest;
    const std::string text = dump(result);
    *ctx.report << text;
    ctx.write("result.json", text);
    if (code != kExitOk) throw TrainingDiverged(failure, trace);
    return code;
  };
}

// ---------------------------------------------------------------- sweep

Action prepare_sweep(Config& c, const std::optional<fs::path>& out) {
  SweepConfig s = preset_config(c);
  s.problem = read_problem(c);
  const std::uint64_t seed = c.get_u64("seed", 1);
  s.seeds = c.get_u64_list("seeds", {seed, seed + 1, seed + 2});
  s.shared_dataset = c.get_bool("shared_dataset", s.shared_dataset);
  s.data_seed = c.get_u64("data_seed", seed);
  std::vector<std::int64_t> defaults(s.widths.begin(), s.widths.end());
  s.widths.clear();
  for (std::int64_t k : c.get_int_list("widths", defaults)) {
    if (k < 1 || k > (1 << 20)) throw ConfigError("'widths' entries must lie in [1, 1048576]");
    s.widths.push_back(static_cast<int>(k));
  }
  s.activation = read_activation(c);
  s.sigma2 = c.get_double("sigma2", s.sigma2);
  s.noise = parse_noise_kind(c.get_string("noise", std::string(to_string(s.noise))));
  s.N_r = get_count(c, "N_r", static_cast<std::int64_t>(s.N_r));
  s.N_0 = get_count(c, "N_0", static_cast<std::int64_t>(s.N_0));
  s.N_s = get_count(c, "N_s", static_cast<std::int64_t>(s.N_s));
  s.weights = read_weights(c);
  s.train = read_train(c, s.train);
  s.jobs = static_cast<int>(get_ranged(c, "jobs", 1, 1, 4096));
  validate(s);
  if (out) s.out_dir = *out;
  return [s](Context& ctx) {
    ctx.seeds = s.seeds;
    ctx.seeds.push_back(s.data_seed);
    const auto records = run_sweep(s);
    if (ctx.out) {
      ctx.note_output("sweep.csv");
      for (const auto& r : records) ctx.note_output(r.trace_path);
    }
    json j;
    if (records.size() >= 3) {
      j = to_json(analyze_sweep(records, s.sigma2));
    } else {
      j["records"] = records.size();
      j["note"] = "fewer than 3 records, no analysis";
    }
    j["manifest"] = kManifest;
    const std::string text = dump(j);
    *ctx.report << text;
    ctx.write("summary.json", text);
    return kExitOk;
  };
}

// ---------------------------------------------------------------- verify

Action prepare_verify(Config& c) {
  const std::uint64_t seed = c.get_u64("seed", 1);
  const std::int64_t trials = get_ranged(c, "trials", 10000, 1, std::int64_t{1} << 32);
  const std::int64_t adv_trials = get_ranged(c, "adversarial_trials", 10000, 0, std::int64_t{1} << 32);
  const int adv_steps = static_cast<int>(get_ranged(c, "adversarial_steps", 10, 1, 1000000));
  const std::int64_t residual_points = get_ranged(c, "residual_points", 10000, 1, std::int64_t{1} << 32);
  const std::int64_t gradient_instances = get_ranged(c, "gradient_instances", 100, 1, 1000000);
  const double sigma2 = c.get_double("sigma2", 0.5);
  const NoiseKind noise = parse_noise_kind(c.get_string("noise", "uniform"));
  return [=](Context& ctx) {
    ctx.seeds = {seed};
    std::vector<json> rows;
    auto sub = [&](std::uint64_t stream) { return stream_seed(seed, stream); };
    for (int n : {1, 2, 10}) rows.push_back(to_json(check_exact_residual(n, 1.0, 1.0, residual_points, sub(n))));
    rows.push_back(to_json(check_gradients(gradient_instances, sub(20))));

    const HjbProblem cube2 = unit_cube_problem(2);
    // Label bound valid for every draw, not just the sampled ones.
    const double M = std::max(std::ceil(cube2.exact_sup_bound() + noise_bound(noise, sigma2)), 1.0);
    std::uint64_t stream = 30;
    for (std::size_t N : {std::size_t{50}, std::size_t{200}}) {
      for (double eta : {0.3, 0.6}) {
        rows.push_back(to_json(check_hoeffding_e1(N, sigma2, eta, M, noise, trials, sub(stream++))));
        rows.push_back(to_json(check_hoeffding_e2(cube2, N, sigma2, eta, M, noise, trials, sub(stream++))));
      }
    }
    for (int k : {1, 2}) {
      CoverEventConfig cc;
      cc.k = k;
      cc.n = 1;
      cc.sigma2 = sigma2;
      cc.noise = noise;
      cc.trials = trials;
      cc.seed = sub(40 + static_cast<std::uint64_t>(k));
      rows.push_back(to_json(check_cover_event(unit_cube_problem(1), cc)));
    }

    const Dataset d = sample_dataset(cube2, 32, 32, 32, sigma2, noise, sub(50));
    PerturbationCheckConfig pc;
    pc.draws.trials = trials;
    pc.draws.seed = sub(51);
    rows.push_back(to_json(check_perturbation_bound(cube2, d, LossWeights{}, pc)));
    if (adv_trials > 0) {
      pc.draws.trials = adv_trials;
      pc.draws.seed = sub(52);
      pc.adversarial_steps = adv_steps;
      rows.push_back(to_json(check_perturbation_bound(cube2, d, LossWeights{}, pc)));
    }
    PerturbationDraws law;
    law.trials = trials;
    law.seed = sub(60);
    for (const auto& e : check_derivative_inequalities_random(cube2, law)) rows.push_back(to_json(e));

    bool all = true;
    std::string text;
    for (const auto& r : rows) {
      all = all && r.at("pass").get<bool>();
      text += r.dump() + "\n";
    }
    *ctx.report << text;
    ctx.write("verify.jsonl", text);
    return all ? kExitOk : kExitChecksFailed;
  };
}

// ---------------------------------------------------------------- fig1

Action prepare_fig1(Config& c) {
  const std::string dir = c.get_string("sweep_dir", "");
  if (dir.empty()) throw ConfigError("fig1 needs a sweep directory (--sweep or sweep_dir)");
  double sigma2_default = 0.5;
  const fs::path sweep_manifest = fs::path(dir) / kManifest;
  if (fs::exists(sweep_manifest)) {
    try {
      const json m = json::parse(read_file(sweep_manifest));
      if (m.contains("config") && m["config"].contains("sigma2")) {
        sigma2_default = std::stod(m["config"]["sigma2"].get<std::string>());
      }
    } catch (const std::exception& e) {
      throw ConfigError("unreadable sweep manifest: " + std::string(e.what()));
    }
  }
  const double sigma2 = c.get_double("sigma2", sigma2_default);
  const bool svg = c.get_bool("svg", true);
  return [=](Context& ctx) {
    const auto records = read_sweep_dir(dir);
    if (!ctx.out) throw InvalidArgument("fig1 needs --out");
    std::optional<fs::path> svg_path;
    if (svg) svg_path = *ctx.out / "fig1.svg";
    emit_fig1_data(records, sigma2, *ctx.out / "fig1.csv", svg_path);
    ctx.note_output("fig1.csv");
    if (svg) ctx.note_output("fig1.svg");
    *ctx.report << "wrote " << (*ctx.out / "fig1.csv").string() << "\n";
    return kExitOk;
  };
}

Action prepare(const std::string& command, Config& c, const std::optional<fs::path>& out) {
  if (command == "bounds") return prepare_bounds(c);
  if (command == "train") return prepare_train(c);
  if (command == "sweep") return prepare_sweep(c, out);
  if (command == "verify") return prepare_verify(c);
  if (command == "fig1") return prepare_fig1(c);
  throw ConfigError("unknown command '" + command + "'");
}

void write_manifest(const fs::path& dir, const std::string& command, const Config& c, const Context& ctx,
                    const std::string& status, const std::string& error, double seconds,
                    const std::optional<fs::path>& rerun_of) {
  json m;
  m["tool"] = "hjbpinn";
  m["version"] = HJBPINN_VERSION;
  m["command"] = command;
  json cfg = json::object();
  for (const auto& [key, value] : c.resolved()) cfg[key] = value;
  m["config"] = cfg;
  m["config_text"] = c.resolved_text();
  m["seeds"] = ctx.seeds;
  m["kernel"] = kernels::active().name;
  m["outputs"] = ctx.outputs;
  m["status"] = status;
  if (!error.empty()) m["error"] = error;
  if (rerun_of) m["rerun_of"] = rerun_of->string();
  m["wall_clock_seconds"] = seconds;
  write_file_atomic(dir / kManifest, dump(m));
}

}  // namespace

int run(const Options& opts, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string command = opts.command;
  Config cfg;
  Context ctx;
  ctx.out = opts.out;
  ctx.report = &out;
  int code = kExitOk;
  std::string status = "ok";
  std::string error;
  Action action;

  try {
    if (command == "rerun") {
      if (!opts.manifest) throw ConfigError("rerun needs --manifest");
      json m;
      try {
        m = json::parse(read_file(*opts.manifest));
        command = m.at("command").get<std::string>();
        for (const auto& [key, value] : m.at("config").items()) cfg.set(key, value.get<std::string>());
      } catch (const json::exception& e) {
        throw ConfigError("malformed manifest: " + std::string(e.what()));
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      if (command == "rerun") throw ConfigError("manifest names no runnable command");
    } else if (opts.config) {
      cfg = Config::load(*opts.config);
    }
    for (const auto& o : opts.overrides) cfg.set_override(o);
    if (opts.seed) cfg.set("seed", std::to_string(*opts.seed));
    if (opts.jobs) cfg.set("jobs", std::to_string(*opts.jobs));
    if (opts.preset) cfg.set_override("preset=" + *opts.preset);
    if (opts.kernel) cfg.set_override("kernel=" + *opts.kernel);
    if (opts.sweep_dir) cfg.set_override("sweep_dir=\"" + opts.sweep_dir->string() + "\"");
    kernels::select(cfg.get_string("kernel", "auto"));
    action = prepare(command, cfg, opts.out);
    cfg.reject_unused();
  } catch (const Error& e) {
    code = kExitConfig;
    status = "failed";
    error = e.what();
    err << "hjbpinn: config error: " << error << "\n";
  }

  if (code == kExitOk) {
    try {
      if (opts.out) fs::create_directories(*opts.out);
      code = action(ctx);
      if (code == kExitChecksFailed) {
        status = "checks_failed";
        error = "one or more checks did not pass";
        err << "hjbpinn: " << error << "\n";
      }
    } catch (const std::exception& e) {
      code = kExitError;
      status = "failed";
      error = e.what();
      err << "hjbpinn: " << command << " failed: " << error << "\n";
    }
  }

  if (opts.out) {
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
      fs::create_directories(*opts.out);
      write_manifest(*opts.out, command, cfg, ctx, status, error, seconds,
                     opts.command == "rerun" ? opts.manifest : std::nullopt);
    } catch (const std::exception& e) {
      err << "hjbpinn: could not write manifest: " << e.what() << "\n";
      if (code == kExitOk) code = kExitError;
    }
  }
  return code;
}

}  // namespace hjbpinn::cli
