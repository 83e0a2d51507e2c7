#include "specflow/runconfig.hpp"

#include "specflow/dataset_io.hpp"
#include "specflow/errors.hpp"
#include "specflow/io.hpp"
#include "specflow/jsonutil.hpp"

namespace specflow {

namespace {

FitSection fit_from_json(const ojson& j) {
  reject_unknown_keys(j, {"k"}, "fit-manifold section");
  FitSection s;
  s.k = int(get_or<int64_t>(j, "k", s.k));
  return s;
}

EvalSection eval_from_json(const ojson& j) {
  reject_unknown_keys(j, {"bins"}, "eval section");
  EvalSection s;
  s.bins = int(get_or<int64_t>(j, "bins", s.bins));
  require(s.bins >= 1, ErrClass::BadConfig, "eval.bins must be positive");
  return s;
}

TraverseSection traverse_from_json(const ojson& j) {
  reject_unknown_keys(j, {"pc", "offsets"}, "traverse section");
  TraverseSection s;
  s.pc = int(get_or<int64_t>(j, "pc", s.pc));
  if (j.contains("offsets"))
    s.offsets = j.at("offsets").get<std::vector<double>>();
  require(s.pc >= 1, ErrClass::BadConfig, "traverse.pc is 1-based");
  require(!s.offsets.empty(), ErrClass::BadConfig,
          "traverse.offsets must not be empty");
  return s;
}

SweepSection sweep_from_json(const ojson& j) {
  reject_unknown_keys(j, {"grid", "limit"}, "sweep-ode section");
  SweepSection s;
  if (j.contains("grid")) s.grid = j.at("grid").get<std::vector<int>>();
  s.limit = int(get_or<int64_t>(j, "limit", s.limit));
  require(!s.grid.empty(), ErrClass::BadConfig,
          "sweep-ode.grid must not be empty");
  for (size_t i = 0; i < s.grid.size(); ++i) {
    require(s.grid[i] >= 1, ErrClass::BadConfig,
            "sweep-ode.grid entries must be positive");
    require(i == 0 || s.grid[i] > s.grid[i - 1], ErrClass::BadConfig,
            "sweep-ode.grid must be strictly increasing");
  }
  require(s.limit >= 2, ErrClass::BadConfig,
          "sweep-ode.limit needs at least two scenarios");
  return s;
}

ojson score_to_json(const OdeOptions& o) {
  ojson j;
  j["steps"] = o.steps;
  j["trace"] = o.trace;
  j["probes"] = o.probes;
  j["probe_dist"] = o.probe_dist;
  j["probe_seed"] = o.probe_seed;
  return j;
}

OdeOptions score_from_json(const ojson& j) {
  reject_unknown_keys(j, {"steps", "trace", "probes", "probe_dist", "probe_seed"},
                      "score section");
  OdeOptions o;
  o.steps = int(get_or<int64_t>(j, "steps", o.steps));
  o.trace = get_or<std::string>(j, "trace", o.trace);
  o.probes = int(get_or<int64_t>(j, "probes", o.probes));
  o.probe_dist = get_or<std::string>(j, "probe_dist", o.probe_dist);
  o.probe_seed = get_or<uint64_t>(j, "probe_seed", o.probe_seed);
  o.validate();
  return o;
}

}  // namespace

void RunConfig::validate() const {
  generate.validate();
  model.validate();
  train.validate();
  score.validate();
  require(fit.k >= 1, ErrClass::BadConfig, "fit-manifold.k must be positive");
  require(fit.k == model.k, ErrClass::BadConfig,
          "fit-manifold.k and train.model.k disagree");
  require(!out.empty(), ErrClass::BadConfig, "out directory must be set");
}

ojson RunConfig::to_json() const {
  ojson j;
  j["format_version"] = kCfgFormat;
  j["seed"] = seed;
  j["out"] = out;
  j["generate"] = generator_config_to_json(generate);
  j["fit-manifold"] = {{"k", fit.k}};
  ojson t;
  t["model"] = model.to_json();
  const ojson tj = train.to_json();
  for (const auto& [key, val] : tj.items()) t[key] = val;
  j["train"] = t;
  j["score"] = score_to_json(score);
  j["eval"] = {{"bins", eval.bins}};
  j["traverse"] = {{"pc", traverse.pc}, {"offsets", traverse.offsets}};
  j["sweep-ode"] = {{"grid", sweep.grid}, {"limit", sweep.limit}};
  return j;
}

RunConfig RunConfig::from_json(const ojson& j) {
  reject_unknown_keys(j,
                      {"format_version", "seed", "out", "generate",
                       "fit-manifold", "train", "score", "eval", "traverse",
                       "sweep-ode"},
                      "run config");
  require(j.contains("format_version") &&
              j.at("format_version") == std::string(kCfgFormat),
          ErrClass::VersionMismatch,
          "run config format_version is not " + std::string(kCfgFormat));
  RunConfig c;
  c.seed = get_or<uint64_t>(j, "seed", c.seed);
  c.out = get_or<std::string>(j, "out", c.out);
  if (j.contains("generate"))
    c.generate = generator_config_from_json(j.at("generate"));
  if (j.contains("fit-manifold")) c.fit = fit_from_json(j.at("fit-manifold"));
  if (j.contains("train")) {
    ojson t = j.at("train");
    if (t.contains("model")) {
      c.model = ModelConfig::from_json(t.at("model"));
      t.erase("model");
    }
    c.train = TrainConfig::from_json(t);
  }
  if (j.contains("score")) c.score = score_from_json(j.at("score"));
  if (j.contains("eval")) c.eval = eval_from_json(j.at("eval"));
  if (j.contains("traverse"))
    c.traverse = traverse_from_json(j.at("traverse"));
  if (j.contains("sweep-ode")) c.sweep = sweep_from_json(j.at("sweep-ode"));
  c.validate();
  return c;
}

std::string serialize_run_config(const RunConfig& c) {
  return std::string(kCfgFormat) + "\n" + c.to_json().dump(2) + "\n";
}

void save_run_config(const RunConfig& c, const std::string& path) {
  write_text_file(path, serialize_run_config(c));
}

RunConfig load_run_config(const std::string& path) {
  const std::string text = read_text_file(path);
  const size_t eol = text.find('\n');
  require(eol != std::string::npos &&
              text.substr(0, eol) == std::string(kCfgFormat),
          ErrClass::VersionMismatch,
          "config " + path + " does not start with " + std::string(kCfgFormat));
  return RunConfig::from_json(parse_json(text.substr(eol + 1), path));
}

}  // namespace specflow
