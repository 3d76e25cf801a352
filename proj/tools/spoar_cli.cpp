// spoar: command-line front end for trajectory generation, training,
// evaluation, experiments, sweeps and the bound calculators.
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spoar/analysis.hpp"
#include "spoar/bench.hpp"
#include "spoar/json_io.hpp"

namespace fs = std::filesystem;
using spoar::io::json;

namespace {

/// Raised for anything wrong with the inputs before work starts.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
};

template <typename F>
auto load(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

json load_config(const Common& c, bool required = true) {
  return load([&] {
    json doc = json::object();
    if (!c.config.empty())
      doc = spoar::io::read_json_file(c.config);
    else if (required)
      throw ConfigError("--config is required");
    for (const auto& o : c.overrides) spoar::io::apply_override(doc, o);
    return doc;
  });
}

std::vector<spoar::Vector> load_trajectory(const std::string& path) {
  return load([&] {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return spoar::io::read_trajectory_csv(in);
  });
}

void write_json(const fs::path& path, const json& j) { spoar::io::write_atomic(path, j.dump(2) + "\n"); }

fs::path out_dir(const Common& c) { return c.out.empty() ? fs::path(".") : fs::path(c.out); }

// ---- generate -------------------------------------------------------------

struct GenerateArgs {
  Common common;
  std::size_t n = 0;
};

int cmd_generate(const GenerateArgs& a) {
  const json doc = load_config(a.common);
  const auto spec = load([&] { return spoar::io::system_from_json(doc.contains("system") ? doc.at("system") : doc); });
  const std::uint64_t seed = a.common.seed.value_or(0);
  if (a.n == 0) throw ConfigError("--n must be positive");
  if (a.common.out.empty()) throw ConfigError("--out is required");

  const auto traj = spoar::simulate(spec, a.n, seed);
  std::ostringstream csv;
  spoar::write_trajectory_csv(csv, traj.data);
  const fs::path out(a.common.out);
  spoar::io::write_atomic(out, csv.str());
  fs::path sidecar = out;
  sidecar += ".json";
  write_json(sidecar, {{"system", spoar::io::to_json(spec)},
                       {"n", a.n},
                       {"seed", seed},
                       {"rho", spoar::spectral_radius(spec.A)},
                       {"sigma_max", spoar::spectral_norm(spec.A)},
                       {"warnings", traj.warnings}});
  for (const auto& w : traj.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

// ---- train / eval ---------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string data;
};

/// Train config file: {"region": ..., "lag": ..., "training": TrainConfig}.
struct TrainSetup {
  spoar::FeasibleRegion region = spoar::FeasibleRegion::covering_square();
  spoar::LagPolicy lag;
  spoar::TrainConfig training;
};

TrainSetup parse_train_setup(const json& doc, const std::optional<std::uint64_t>& seed) {
  return load([&] {
    spoar::io::detail::allow_keys(doc, "train config", {"region", "lag", "training"});
    TrainSetup s;
    if (doc.contains("region")) s.region = spoar::io::region_from_json(doc.at("region"));
    if (doc.contains("lag")) s.lag = spoar::io::lag_policy_from_json(doc.at("lag"));
    if (doc.contains("training")) s.training = spoar::io::train_config_from_json(doc.at("training"));
    if (seed) s.training.seed = *seed;
    s.training.validate();
    return s;
  });
}

json setup_json(const TrainSetup& s) {
  return {{"region", spoar::io::to_json(s.region)},
          {"lag", spoar::io::to_json(s.lag)},
          {"training", spoar::io::to_json(s.training)}};
}

int cmd_train(const TrainArgs& a) {
  const auto setup = parse_train_setup(load_config(a.common, false), a.common.seed);
  const auto series = load_trajectory(a.data);
  if (a.common.out.empty()) throw ConfigError("--out is required");

  const std::size_t lag =
      setup.lag.use_pacf ? spoar::select_lag(series, setup.lag.max_lag, setup.lag.confidence) : setup.lag.fixed;
  const auto data = spoar::build_lagged(series, lag);
  const auto report = spoar::train(data, setup.region, setup.training);
  write_json(a.common.out, {{"model", spoar::io::to_json(report.model)},
                            {"train_report", spoar::io::to_json(report)},
                            {"config", setup_json(setup)},
                            {"data", a.data}});
  return 0;
}

struct EvalArgs {
  Common common;
  std::string data;
  std::string model;
  std::size_t start = 0;
};

int cmd_eval(const EvalArgs& a) {
  const json doc = load_config(a.common, false);
  const auto region = load([&] {
    spoar::io::detail::allow_keys(doc, "eval config", {"region", "lag", "training"});
    return doc.contains("region") ? spoar::io::region_from_json(doc.at("region"))
                                  : spoar::FeasibleRegion::covering_square();
  });
  const auto model = load([&] {
    json m = spoar::io::read_json_file(a.model);
    return spoar::io::model_from_json(m.contains("model") ? m.at("model") : m);
  });
  const auto series = load_trajectory(a.data);
  const std::size_t start = a.start == 0 ? model.lag() : a.start;
  if (start < model.lag() || start >= series.size())
    throw ConfigError("--start must lie in [lag, series length)");

  const std::size_t p = series.size() - start;
  const double regret = spoar::normalized_regret(model, series, start, p, region);
  const auto data = spoar::build_lagged(std::span<const spoar::Vector>(series).subspan(start - model.lag()), model.lag());
  json risks = json::object();
  for (auto kind : {spoar::LossKind::spo, spoar::LossKind::spo_plus, spoar::LossKind::l1, spoar::LossKind::l2})
    risks[std::string(spoar::to_string(kind))] = spoar::empirical_risk(model, data, kind, &region);
  json out = {{"normalized_regret", regret},
              {"first_step", start + 1},
              {"last_step", series.size()},
              {"empirical_risk", risks},
              {"config", {{"region", spoar::io::to_json(region)}, {"model", a.model}, {"data", a.data}}}};
  if (a.common.out.empty())
    std::cout << out.dump(2) << '\n';
  else
    write_json(a.common.out, out);
  return 0;
}

// ---- experiment and sweeps ------------------------------------------------

struct ExperimentArgs {
  Common common;
  std::optional<std::size_t> trials;
  unsigned jobs = 0;
  std::vector<double> values;
};

spoar::ExperimentConfig parse_experiment(const json& doc, const ExperimentArgs& a) {
  return load([&] {
    auto cfg = spoar::io::experiment_from_json(doc);
    if (a.trials) cfg.trials = *a.trials;
    if (a.common.seed) cfg.master_seed = *a.common.seed;
    cfg.validate();
    return cfg;
  });
}

void write_trials(const fs::path& dir, std::span<const spoar::RegretReport> reports) {
  std::ostringstream csv;
  spoar::write_trials_csv(csv, reports);
  spoar::io::write_atomic(dir / "trials.csv", csv.str());
}

int report_partial(const fs::path& dir, const spoar::ExperimentConfig& cfg, const spoar::TrialFailure& f,
                   std::vector<spoar::RegretReport> done) {
  auto partial = spoar::aggregate(cfg, f.partial());
  if (!f.partial().empty()) done.push_back(std::move(partial));
  write_trials(dir, done);
  std::cerr << "error: " << f.what() << " (" << f.partial().size() << " completed trials written)\n";
  return 2;
}

int cmd_experiment(const ExperimentArgs& a) {
  const auto cfg = parse_experiment(load_config(a.common), a);
  const auto dir = out_dir(a.common);
  try {
    const auto report = spoar::run_experiment(cfg, a.jobs);
    write_trials(dir, std::span(&report, 1));
    write_json(dir / "report.json", {{"config", spoar::io::to_json(cfg)}, {"report", spoar::io::to_json(report)}});
    for (const auto& s : report.summaries)
      std::printf("%-4s median %.6f  mean %.6f\n", std::string(spoar::to_string(s.loss)).c_str(), s.stats.median,
                  s.stats.mean);
    return 0;
  } catch (const spoar::TrialFailure& f) {
    if (f.partial().empty()) {
      write_trials(dir, {});
      std::cerr << "error: " << f.what() << '\n';
      return 2;
    }
    return report_partial(dir, cfg, f, {});
  }
}

enum class SweepKind { deg, a12 };

int cmd_sweep(const ExperimentArgs& a, SweepKind kind) {
  const json doc = load_config(a.common);
  const auto cfg = parse_experiment(doc, a);
  const char* key = kind == SweepKind::deg ? "deg" : "a12";
  std::vector<double> values = a.values;
  if (values.empty()) {
    load([&] {
      if (!doc.contains("sweep") || !doc.at("sweep").contains(key))
        throw ConfigError(std::string("no sweep values: pass --values or set sweep.") + key);
      values = doc.at("sweep").at(key).get<std::vector<double>>();
      return 0;
    });
  }
  if (values.empty()) throw ConfigError("sweep value list is empty");
  if (kind == SweepKind::deg)
    for (double v : values)
      if (v < 1 || v != static_cast<int>(v)) throw ConfigError("deg values must be positive integers");

  const auto dir = out_dir(a.common);
  std::vector<spoar::RegretReport> done;
  json points = json::array();
  for (double v : values) {
    spoar::ExperimentConfig point_cfg = cfg;
    if (kind == SweepKind::deg)
      point_cfg.system.deg = static_cast<int>(v);
    else
      point_cfg.system.A(0, 1) = v;
    try {
      auto point = spoar::make_point(v, point_cfg, a.jobs);
      points.push_back(spoar::io::to_json(point));
      std::printf("%s=%g  rho %.4f  sigma_max %.4f", key, v, point.report.rho, point.report.sigma_max);
      for (const auto& s : point.report.summaries)
        std::printf("  %s %.6f", std::string(spoar::to_string(s.loss)).c_str(), s.stats.median);
      std::printf("\n");
      std::fflush(stdout);
      done.push_back(std::move(point.report));
    } catch (const spoar::TrialFailure& f) {
      return report_partial(dir, point_cfg, f, std::move(done));
    }
  }
  write_trials(dir, done);
  write_json(dir / "report.json",
             {{"config", spoar::io::to_json(cfg)}, {"sweep", {{"parameter", key}, {"values", values}}}, {"points", points}});
  return 0;
}

// ---- bounds / blocks / pacf -----------------------------------------------

struct BoundsArgs {
  Common common;
  std::string inputs;
};

/// Inputs file: empirical_risk, rademacher, omega, m, delta, variant, and
/// either beta_al or a "mixing" object {A, k, c} for the proxy.
int cmd_bounds(const BoundsArgs& a) {
  Common c = a.common;
  if (c.config.empty()) c.config = a.inputs;
  const json doc = load_config(c);
  spoar::BoundInputs in;
  spoar::BoundVariant variant = spoar::BoundVariant::expected;
  json mixing;
  load([&] {
    spoar::io::detail::allow_keys(doc, "bound inputs",
                                  {"empirical_risk", "rademacher", "omega", "m", "delta", "beta_al", "mixing", "variant"});
    using spoar::io::detail::get_or;
    in.empirical_risk = get_or<double>(doc, "empirical_risk", in.empirical_risk);
    in.rademacher = get_or<double>(doc, "rademacher", in.rademacher);
    in.omega = get_or<double>(doc, "omega", in.omega);
    in.m = spoar::io::detail::get_count(doc, "m", in.m);
    in.delta = get_or<double>(doc, "delta", in.delta);
    const auto v = get_or<std::string>(doc, "variant", "expected");
    if (v != "expected" && v != "empirical") throw ConfigError("variant must be 'expected' or 'empirical'");
    variant = v == "expected" ? spoar::BoundVariant::expected : spoar::BoundVariant::empirical;
    if (doc.contains("mixing")) {
      if (doc.contains("beta_al")) throw ConfigError("give either beta_al or mixing, not both");
      const auto& mx = doc.at("mixing");
      spoar::io::detail::allow_keys(mx, "mixing", {"A", "k", "c"});
      const auto A = spoar::io::matrix_from_json(mx.at("A"));
      const auto k = spoar::io::detail::get_count(mx, "k", 1);
      const double cst = get_or<double>(mx, "c", 1.0);
      in.beta_al = spoar::mixing_proxy(A, k, cst);
      in.beta_source = spoar::BetaSource::proxy;
      mixing = {{"A", spoar::io::to_json(A)}, {"k", k}, {"c", cst}, {"label", "proxy: c * rho^k"}};
    } else {
      in.beta_al = get_or<double>(doc, "beta_al", 0.0);
      in.beta_source = spoar::BetaSource::user;
    }
    in.validate();
    return 0;
  });

  const auto result = spoar::generalization_bound(in, variant);
  json inputs = {{"empirical_risk", in.empirical_risk}, {"rademacher", in.rademacher}, {"omega", in.omega},
                 {"m", in.m},                           {"delta", in.delta},           {"beta_al", in.beta_al}};
  if (!mixing.is_null()) inputs["mixing"] = mixing;
  json out = {{"inputs", inputs},
              {"delta_prime", result.delta_prime},
              {"bound", result.bound},
              {"variant", spoar::to_string(variant)},
              {"beta_source", spoar::to_string(in.beta_source)}};
  if (a.common.out.empty())
    std::cout << out.dump(2) << '\n';
  else
    write_json(a.common.out, out);
  return 0;
}

struct BlocksArgs {
  Common common;
  std::size_t n = 0, a = 0, m = 0, l = 0;
};

int cmd_blocks(const BlocksArgs& b) {
  const auto split = load([&] { return spoar::block_split(b.n, b.a, b.m, b.l); });
  json out = spoar::io::to_json(split);
  out["n"] = b.n;
  if (b.common.out.empty())
    std::cout << out.dump(2) << '\n';
  else
    write_json(b.common.out, out);
  return 0;
}

struct PacfArgs {
  Common common;
  std::string data;
  std::size_t max_lag = 5;
  double confidence = 1.96;
};

int cmd_pacf(const PacfArgs& a) {
  const auto series = load_trajectory(a.data);
  if (series.empty()) throw ConfigError("trajectory is empty");
  json coords = json::array();
  const auto d = series.front().size();
  for (Eigen::Index c = 0; c < d; ++c) {
    std::vector<double> x;
    for (const auto& y : series) x.push_back(y[c]);
    coords.push_back({{"coordinate", c + 1}, {"pacf", spoar::pacf(x, a.max_lag)}});
  }
  json out = {{"band", a.confidence / std::sqrt(static_cast<double>(series.size()))},
              {"coordinates", coords},
              {"selected_lag", spoar::select_lag(series, a.max_lag, a.confidence)},
              {"config", {{"data", a.data}, {"max_lag", a.max_lag}, {"confidence", a.confidence}}}};
  if (a.common.out.empty())
    std::cout << out.dump(2) << '\n';
  else
    write_json(a.common.out, out);
  return 0;
}

void add_common(CLI::App* sub, Common& c, bool with_config = true) {
  if (with_config) {
    sub->add_option("-c,--config", c.config, "JSON config file");
    sub->add_option("--set", c.overrides, "Override a config value, e.g. --set system.deg=4");
  }
  sub->add_option("-o,--out", c.out, "Output path (file or directory, per subcommand)");
}

void add_seed(CLI::App* sub, Common& c) {
  sub->add_option_function<std::uint64_t>("--seed", [&c](const std::uint64_t& s) { c.seed = s; }, "Master seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predict-then-optimize with autoregressive cost models"};
  app.require_subcommand(1, 1);

  GenerateArgs gen;
  auto* s_gen = app.add_subcommand("generate", "Simulate a cost trajectory to CSV");
  add_common(s_gen, gen.common);
  add_seed(s_gen, gen.common);
  s_gen->add_option("--n", gen.n, "Number of recorded steps")->required();

  TrainArgs tr;
  auto* s_train = app.add_subcommand("train", "Fit an AR model to a trajectory CSV");
  add_common(s_train, tr.common);
  add_seed(s_train, tr.common);
  s_train->add_option("--data", tr.data, "Trajectory CSV")->required();

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "Score a model on a trajectory");
  add_common(s_eval, ev.common);
  s_eval->add_option("--data", ev.data, "Trajectory CSV")->required();
  s_eval->add_option("--model", ev.model, "Model JSON (as written by train)")->required();
  s_eval->add_option("--start", ev.start, "Number of leading steps excluded from scoring (default: lag)");

  ExperimentArgs ex;
  auto* s_exp = app.add_subcommand("experiment", "Run seeded trials and write report.json and trials.csv");
  ExperimentArgs sd;
  auto* s_deg = app.add_subcommand("sweep-deg", "Experiment per observer degree");
  ExperimentArgs sa;
  auto* s_a12 = app.add_subcommand("sweep-a12", "Experiment per coupling value a12");
  for (auto [sub, args] : {std::pair{s_exp, &ex}, std::pair{s_deg, &sd}, std::pair{s_a12, &sa}}) {
    add_common(sub, args->common);
    add_seed(sub, args->common);
    sub->add_option_function<std::size_t>("--trials", [args](const std::size_t& t) { args->trials = t; },
                                          "Override the trial count");
    sub->add_option("-j,--jobs", args->jobs, "Worker threads (0 = all cores)");
  }
  s_deg->add_option("--values", sd.values, "Degrees to sweep (default: sweep.deg in config)")->delimiter(',');
  s_a12->add_option("--values", sa.values, "a12 values to sweep (default: sweep.a12 in config)")->delimiter(',');

  BoundsArgs bo;
  auto* s_bounds = app.add_subcommand("bounds", "Evaluate the mixing generalization bound");
  add_common(s_bounds, bo.common);
  s_bounds->add_option("--inputs", bo.inputs, "Bound inputs JSON");

  BlocksArgs bl;
  auto* s_blocks = app.add_subcommand("blocks", "Print the interleaved block split of 1..n");
  add_common(s_blocks, bl.common, false);
  s_blocks->add_option("--n", bl.n)->required();
  s_blocks->add_option("--a", bl.a)->required();
  s_blocks->add_option("--m", bl.m)->required();
  s_blocks->add_option("--l", bl.l)->required();

  PacfArgs pa;
  auto* s_pacf = app.add_subcommand("pacf", "Per-coordinate PACF and the selected lag");
  add_common(s_pacf, pa.common, false);
  s_pacf->add_option("--data", pa.data, "Trajectory CSV")->required();
  s_pacf->add_option("--max-lag", pa.max_lag);
  s_pacf->add_option("--confidence", pa.confidence);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*s_gen) return cmd_generate(gen);
    if (*s_train) return cmd_train(tr);
    if (*s_eval) return cmd_eval(ev);
    if (*s_exp) return cmd_experiment(ex);
    if (*s_deg) return cmd_sweep(sd, SweepKind::deg);
    if (*s_a12) return cmd_sweep(sa, SweepKind::a12);
    if (*s_bounds) return cmd_bounds(bo);
    if (*s_blocks) return cmd_blocks(bl);
    if (*s_pacf) return cmd_pacf(pa);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
