#pragma once

// JSON and CSV interchange: experiment/system/region/training configs, model
// files, reports, trajectory CSV input, dotted-path overrides, and atomic
// file output.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spoar/analysis.hpp"
#include "spoar/armodel.hpp"
#include "spoar/bench.hpp"
#include "spoar/dynsys.hpp"
#include "spoar/error.hpp"
#include "spoar/geometry.hpp"
#include "spoar/train.hpp"

namespace spoar::io {

using json = nlohmann::json;

namespace detail {

using spoar::detail::require;

inline void allow_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  require(j.is_object(), Errc::invalid_argument, std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto k : keys) known = known || key == k;
    require(known, Errc::invalid_argument, "unknown key '" + key + "' in " + std::string(where));
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("bad value for '") + key + "': " + e.what());
  }
}

inline std::size_t get_count(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  require(v.is_number_integer() && v.get<std::int64_t>() >= 0, Errc::invalid_argument,
          std::string("'") + key + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

}  // namespace detail

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

inline Vector vector_from_json(const json& j) {
  detail::require(j.is_array(), Errc::invalid_argument, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    detail::require(j[i].is_number(), Errc::invalid_argument, "expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

/// Row-major nested arrays.
inline Matrix matrix_from_json(const json& j) {
  detail::require(j.is_array() && !j.empty(), Errc::invalid_argument, "expected a nonempty array of rows");
  const auto cols = j.front().size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    detail::require(j[i].is_array() && j[i].size() == cols, Errc::dimension_mismatch, "matrix rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) {
      detail::require(j[i][c].is_number(), Errc::invalid_argument, "expected a number");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return m;
}

// ---- region ---------------------------------------------------------------

inline json to_json(const FeasibleRegion& r) {
  if (r.kind() == RegionKind::ball) return {{"kind", "ball"}, {"center", to_json(r.center())}, {"radius", r.radius()}};
  json vs = json::array();
  for (const auto& v : r.vertices()) vs.push_back(to_json(v));
  return {{"kind", "polytope"}, {"vertices", vs}};
}

inline FeasibleRegion region_from_json(const json& j) {
  const auto kind = detail::get_or<std::string>(j, "kind", "");
  if (kind == "ball") {
    detail::allow_keys(j, "region", {"kind", "center", "radius"});
    detail::require(j.contains("center") && j.contains("radius"), Errc::invalid_argument, "ball needs center and radius");
    return FeasibleRegion::ball(vector_from_json(j.at("center")), detail::get_or<double>(j, "radius", 0.0));
  }
  detail::require(kind == "polytope", Errc::invalid_argument, "region kind must be 'polytope' or 'ball'");
  detail::allow_keys(j, "region", {"kind", "vertices"});
  detail::require(j.contains("vertices") && j.at("vertices").is_array(), Errc::invalid_argument,
                  "polytope needs a vertex list");
  std::vector<Vector> vs;
  for (const auto& v : j.at("vertices")) vs.push_back(vector_from_json(v));
  return FeasibleRegion::polytope(std::move(vs));
}

// ---- system ---------------------------------------------------------------

inline json to_json(const SystemSpec& s) {
  return {{"A", to_json(s.A)},
          {"Q", to_json(s.Q)},
          {"H", to_json(s.observer())},
          {"deg", s.deg},
          {"xi_halfwidth", s.xi_halfwidth},
          {"x0", to_json(s.initial_state())},
          {"burn_in", s.burn_in},
          {"allow_unstable", s.allow_unstable}};
}

inline SystemSpec system_from_json(const json& j) {
  detail::allow_keys(j, "system", {"A", "Q", "H", "deg", "xi_halfwidth", "x0", "burn_in", "allow_unstable"});
  detail::require(j.contains("A") && j.contains("Q"), Errc::invalid_argument, "system needs A and Q");
  SystemSpec s;
  s.A = matrix_from_json(j.at("A"));
  s.Q = matrix_from_json(j.at("Q"));
  if (j.contains("H")) s.H = matrix_from_json(j.at("H"));
  if (j.contains("x0")) s.x0 = vector_from_json(j.at("x0"));
  s.deg = detail::get_or<int>(j, "deg", s.deg);
  s.xi_halfwidth = detail::get_or<double>(j, "xi_halfwidth", s.xi_halfwidth);
  s.burn_in = detail::get_count(j, "burn_in", s.burn_in);
  s.allow_unstable = detail::get_or<bool>(j, "allow_unstable", s.allow_unstable);
  s.validate();
  return s;
}

// ---- training -------------------------------------------------------------

inline json to_json(const TrainConfig& c) {
  return {{"loss", std::string(to_string(c.loss))},
          {"step_size", c.step_size},
          {"schedule", std::string(to_string(c.schedule))},
          {"stop_tol", c.stop_tol},
          {"max_epochs", c.max_epochs},
          {"optimizer", std::string(to_string(c.optimizer))},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
          {"seed", c.seed},
          {"factor_two", c.factor_two},
          {"batch_size", c.batch_size},
          {"closed_form", c.closed_form},
          {"init_scale", c.init_scale}};
}

inline TrainConfig train_config_from_json(const json& j) {
  detail::allow_keys(j, "training config",
                     {"loss", "step_size", "schedule", "stop_tol", "max_epochs", "optimizer", "adam", "seed",
                      "factor_two", "batch_size", "closed_form", "init_scale"});
  TrainConfig c;
  c.loss = parse_loss_kind(detail::get_or<std::string>(j, "loss", "spo+"));
  c.step_size = detail::get_or<double>(j, "step_size", c.step_size);
  const auto schedule = detail::get_or<std::string>(j, "schedule", "constant");
  detail::require(schedule == "constant" || schedule == "inv_sqrt_t", Errc::invalid_argument,
                  "schedule must be 'constant' or 'inv_sqrt_t'");
  c.schedule = schedule == "constant" ? Schedule::constant : Schedule::inv_sqrt_t;
  c.stop_tol = detail::get_or<double>(j, "stop_tol", c.stop_tol);
  c.max_epochs = detail::get_count(j, "max_epochs", c.max_epochs);
  const auto opt = detail::get_or<std::string>(j, "optimizer", "subgradient");
  detail::require(opt == "subgradient" || opt == "adam", Errc::invalid_argument,
                  "optimizer must be 'subgradient' or 'adam'");
  c.optimizer = opt == "adam" ? OptimizerKind::adam : OptimizerKind::subgradient;
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    detail::allow_keys(a, "adam", {"beta1", "beta2", "eps"});
    c.adam.beta1 = detail::get_or<double>(a, "beta1", c.adam.beta1);
    c.adam.beta2 = detail::get_or<double>(a, "beta2", c.adam.beta2);
    c.adam.eps = detail::get_or<double>(a, "eps", c.adam.eps);
  }
  c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
  c.factor_two = detail::get_or<bool>(j, "factor_two", c.factor_two);
  c.batch_size = detail::get_count(j, "batch_size", c.batch_size);
  c.closed_form = detail::get_or<bool>(j, "closed_form", c.closed_form);
  c.init_scale = detail::get_or<double>(j, "init_scale", c.init_scale);
  c.validate();
  return c;
}

inline json to_json(const TrainReport& r) {
  return {{"epochs", r.epochs},
          {"stop_reason", std::string(to_string(r.stop))},
          {"last_step", r.last_step},
          {"risk_trace", r.risk_trace}};
}

// ---- model ----------------------------------------------------------------

/// {lag, dim, mats}: mats[i] is M_{i+1} as row-major nested arrays.
inline json to_json(const ArModel& m) {
  json mats = json::array();
  for (std::size_t i = 1; i <= m.lag(); ++i) mats.push_back(to_json(m.mat(i)));
  return {{"lag", m.lag()}, {"dim", m.dim()}, {"mats", mats}};
}

inline ArModel model_from_json(const json& j) {
  detail::require(j.is_object() && j.contains("mats") && j.contains("lag") && j.contains("dim"), Errc::invalid_argument,
                  "model needs lag, dim and mats");
  std::vector<Matrix> mats;
  for (const auto& m : j.at("mats")) mats.push_back(matrix_from_json(m));
  auto model = ArModel::from_mats(mats);
  detail::require(model.lag() == detail::get_count(j, "lag", 0) && model.dim() == detail::get_count(j, "dim", 0),
                  Errc::dimension_mismatch, "model lag/dim fields disagree with mats");
  return model;
}

// ---- experiment -----------------------------------------------------------

inline json to_json(const LagPolicy& p) {
  if (p.use_pacf) return {{"policy", "pacf"}, {"max_lag", p.max_lag}, {"confidence", p.confidence}};
  return {{"policy", "fixed"}, {"value", p.fixed}};
}

inline LagPolicy lag_policy_from_json(const json& j) {
  detail::allow_keys(j, "lag", {"policy", "value", "max_lag", "confidence"});
  LagPolicy p;
  const auto policy = detail::get_or<std::string>(j, "policy", "fixed");
  detail::require(policy == "fixed" || policy == "pacf", Errc::invalid_argument, "lag policy must be 'fixed' or 'pacf'");
  p.use_pacf = policy == "pacf";
  p.fixed = detail::get_count(j, "value", p.fixed);
  p.max_lag = detail::get_count(j, "max_lag", p.max_lag);
  p.confidence = detail::get_or<double>(j, "confidence", p.confidence);
  return p;
}

inline json to_json(const ExperimentConfig& c) {
  json losses = json::array();
  for (const auto& tc : c.losses) losses.push_back(to_json(tc));
  return {{"system", to_json(c.system)}, {"region", to_json(c.region)}, {"q", c.q},        {"p", c.p},
          {"lag", to_json(c.lag)},       {"losses", losses},            {"trials", c.trials}, {"seed", c.master_seed}};
}

/// Keys outside the experiment proper ("sweep") are tolerated so one file can
/// drive both experiment and sweep commands.
inline ExperimentConfig experiment_from_json(const json& j) {
  detail::allow_keys(j, "experiment config", {"system", "region", "q", "p", "lag", "losses", "trials", "seed", "sweep"});
  ExperimentConfig c;
  if (j.contains("system")) c.system = system_from_json(j.at("system"));
  if (j.contains("region")) c.region = region_from_json(j.at("region"));
  c.q = detail::get_count(j, "q", c.q);
  c.p = detail::get_count(j, "p", c.p);
  if (j.contains("lag")) c.lag = lag_policy_from_json(j.at("lag"));
  if (j.contains("losses")) {
    detail::require(j.at("losses").is_array(), Errc::invalid_argument, "losses must be an array");
    for (const auto& tc : j.at("losses")) c.losses.push_back(train_config_from_json(tc));
  }
  c.trials = detail::get_count(j, "trials", c.trials);
  c.master_seed = detail::get_or<std::uint64_t>(j, "seed", c.master_seed);
  c.validate();
  return c;
}

// ---- reports --------------------------------------------------------------

inline json to_json(const Quantiles& q) {
  return {{"min", q.min}, {"q25", q.q25}, {"median", q.median}, {"q75", q.q75}, {"max", q.max}, {"mean", q.mean}};
}

inline json to_json(const RegretReport& r) {
  json summaries = json::array();
  for (const auto& s : r.summaries)
    summaries.push_back({{"loss", std::string(to_string(s.loss))}, {"quantiles", to_json(s.stats)}, {"regrets", s.regrets}});
  json trials = json::array();
  for (const auto& t : r.trials) {
    json outcomes = json::array();
    for (const auto& o : t.outcomes)
      outcomes.push_back({{"loss", std::string(to_string(o.loss))},
                          {"normalized_regret", o.regret},
                          {"epochs", o.epochs},
                          {"stop_reason", std::string(to_string(o.stop))}});
    trials.push_back({{"trial", t.trial}, {"seed", t.seed}, {"lag", t.lag}, {"outcomes", outcomes}});
  }
  return {{"rho", r.rho},           {"sigma_max", r.sigma_max}, {"deg", r.deg},
          {"a12", r.a12},           {"summaries", summaries},   {"trials", trials},
          {"runtime_seconds", r.runtime_seconds}};
}

inline json to_json(const SweepPoint& p) {
  json proxy = json::array();
  for (const auto& [k, v] : p.mixing_proxy) proxy.push_back({{"k", k}, {"value", v}});
  return {{"value", p.value},
          {"rho", p.report.rho},
          {"sigma_max", p.report.sigma_max},
          {"mixing_proxy", {{"label", "proxy: c * rho^k with c = 1"}, {"values", proxy}}},
          {"report", to_json(p.report)}};
}

inline json to_json(const BlockSplit& s) {
  const auto ranges = [](const std::vector<IndexRange>& rs) {
    json out = json::array();
    for (const auto& r : rs) out.push_back({r.first, r.last});
    return out;
  };
  return {{"a", s.a}, {"m", s.m}, {"l", s.l}, {"indexing", "1-based closed"}, {"y0", ranges(s.y0_blocks)},
          {"y1", ranges(s.y1_blocks)}};
}

// ---- trajectory CSV -------------------------------------------------------

/// Reads "t,y1,...,yd" CSV as written by write_trajectory_csv.
inline std::vector<Vector> read_trajectory_csv(std::istream& is) {
  std::string line;
  spoar::detail::require(static_cast<bool>(std::getline(is, line)), Errc::invalid_argument, "trajectory CSV is empty");
  std::size_t cols = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) ++cols;
  }
  spoar::detail::require(cols >= 2, Errc::invalid_argument, "trajectory CSV needs a t column and at least one y column");
  std::vector<Vector> out;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Vector y(static_cast<Eigen::Index>(cols - 1));
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c > 0) {
        spoar::detail::require(c < cols, Errc::invalid_argument, "row " + std::to_string(row) + " has too many fields");
        try {
          y[static_cast<Eigen::Index>(c - 1)] = std::stod(cell);
        } catch (const std::exception&) {
          throw Error(Errc::invalid_argument, "row " + std::to_string(row) + ": bad number '" + cell + "'");
        }
      }
      ++c;
    }
    spoar::detail::require(c == cols, Errc::invalid_argument, "row " + std::to_string(row) + " has too few fields");
    out.push_back(std::move(y));
  }
  return out;
}

// ---- files and overrides --------------------------------------------------

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  spoar::detail::require(in.good(), Errc::invalid_argument, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::invalid_argument, path.string() + ": " + e.what());
  }
}

/// Writes to a sibling temporary file, then renames over `path`.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    spoar::detail::require(out.good(), Errc::invalid_argument, "cannot write " + tmp.string());
    out << content;
    out.flush();
    spoar::detail::require(out.good(), Errc::invalid_argument, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Applies "a.b.c=value" to `doc`. The value is parsed as JSON when it can be,
/// otherwise stored as a string. Numeric path segments index arrays.
inline void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  spoar::detail::require(eq != std::string_view::npos && eq > 0, Errc::invalid_argument,
                         "override must look like key=value: " + std::string(assignment));
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> parts;
  while (std::getline(ss, key, '.')) parts.push_back(key);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& part = parts[i];
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        throw Error(Errc::invalid_argument, "override path segment '" + part + "' must index an array");
      }
      spoar::detail::require(idx < node->size(), Errc::invalid_argument, "override index out of range: " + path);
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      spoar::detail::require(node->is_object(), Errc::invalid_argument, "override path crosses a scalar: " + path);
      node = &(*node)[part];
    }
    if (last) *node = value;
  }
}

}  // namespace spoar::io
