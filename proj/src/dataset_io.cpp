#include "specflow/dataset_io.hpp"

#include <string_view>

#include "specflow/io.hpp"

namespace specflow {

ojson generator_config_to_json(const GeneratorConfig& cfg) {
  ojson j;
  j["n_train"] = cfg.n_train;
  j["n_val"] = cfg.n_val;
  j["val_anomaly_frac"] = cfg.val_anomaly_frac;
  j["speed_min"] = cfg.speed_min;
  j["speed_max"] = cfg.speed_max;
  j["accel_lat_max"] = cfg.accel_lat_max;
  j["curvature_max"] = cfg.curvature_max;
  j["jerk_max"] = cfg.jerk_max;
  j["noise_lat"] = cfg.noise_lat;
  j["noise_long"] = cfg.noise_long;
  j["brake_decel"] = cfg.brake_decel;
  j["swerve_yaw"] = cfg.swerve_yaw;
  j["violation_offset_min"] = cfg.violation_offset_min;
  j["violation_offset_max"] = cfg.violation_offset_max;
  j["violation_hold"] = cfg.violation_hold;
  j["jitter_sigma"] = cfg.jitter_sigma;
  j["scale"] = cfg.scale;
  return j;
}

GeneratorConfig generator_config_from_json(const ojson& j) {
  reject_unknown_keys(
      j,
      {"n_train", "n_val", "val_anomaly_frac", "speed_min", "speed_max",
       "accel_lat_max", "curvature_max", "jerk_max", "noise_lat",
       "noise_long", "brake_decel", "swerve_yaw", "violation_offset_min",
       "violation_offset_max", "violation_hold", "jitter_sigma", "scale"},
      "generator config");
  GeneratorConfig cfg;
  cfg.n_train = get_or(j, "n_train", cfg.n_train);
  cfg.n_val = get_or(j, "n_val", cfg.n_val);
  cfg.val_anomaly_frac = get_or(j, "val_anomaly_frac", cfg.val_anomaly_frac);
  cfg.speed_min = get_or(j, "speed_min", cfg.speed_min);
  cfg.speed_max = get_or(j, "speed_max", cfg.speed_max);
  cfg.accel_lat_max = get_or(j, "accel_lat_max", cfg.accel_lat_max);
  cfg.curvature_max = get_or(j, "curvature_max", cfg.curvature_max);
  cfg.jerk_max = get_or(j, "jerk_max", cfg.jerk_max);
  cfg.noise_lat = get_or(j, "noise_lat", cfg.noise_lat);
  cfg.noise_long = get_or(j, "noise_long", cfg.noise_long);
  cfg.brake_decel = get_or(j, "brake_decel", cfg.brake_decel);
  cfg.swerve_yaw = get_or(j, "swerve_yaw", cfg.swerve_yaw);
  cfg.violation_offset_min =
      get_or(j, "violation_offset_min", cfg.violation_offset_min);
  cfg.violation_offset_max =
      get_or(j, "violation_offset_max", cfg.violation_offset_max);
  cfg.violation_hold = get_or(j, "violation_hold", cfg.violation_hold);
  cfg.jitter_sigma = get_or(j, "jitter_sigma", cfg.jitter_sigma);
  cfg.scale = get_or(j, "scale", cfg.scale);
  cfg.validate();
  return cfg;
}

namespace {

ojson scenario_to_json(const Scenario& s) {
  ojson j;
  j["seed"] = s.seed;
  j["anomaly_tag"] = tag_name(s.anomaly_tag);
  ojson hist = ojson::array();
  for (const HistFrame& f : s.context.history)
    hist.push_back({f.x, f.y, f.vx, f.vy, f.heading});
  j["history"] = std::move(hist);
  ojson goal = ojson::array();
  for (const Vec2& p : s.context.goal_lane) goal.push_back({p.x, p.y});
  j["goal_lane"] = std::move(goal);
  ojson fut = ojson::array();
  for (const Vec2& p : s.future) fut.push_back({p.x, p.y});
  j["future"] = std::move(fut);
  return j;
}

Scenario scenario_from_json(const ojson& j, size_t line_no) {
  const std::string where = "dataset record at line " + std::to_string(line_no);
  reject_unknown_keys(j, {"seed", "anomaly_tag", "history", "goal_lane", "future"},
                      where);
  Scenario s;
  try {
    s.seed = j.at("seed").get<uint64_t>();
    s.anomaly_tag = tag_from_name(j.at("anomaly_tag").get<std::string>());
    for (const auto& f : j.at("history"))
      s.context.history.push_back({f.at(0).get<double>(), f.at(1).get<double>(),
                                   f.at(2).get<double>(), f.at(3).get<double>(),
                                   f.at(4).get<double>()});
    for (const auto& p : j.at("goal_lane"))
      s.context.goal_lane.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& p : j.at("future"))
      s.future.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  } catch (const ojson::exception& e) {
    fail(ErrClass::ParseError, where + ": " + e.what());
  }
  require(s.context.history.size() == size_t(kHistoryLen), ErrClass::ParseError,
          where + ": history must have 11 frames");
  require(s.context.goal_lane.size() == size_t(kGoalPoints), ErrClass::ParseError,
          where + ": goal_lane must have 20 points");
  require(s.future.size() == size_t(kHorizon), ErrClass::ParseError,
          where + ": future must have 80 points");
  return s;
}

}  // namespace

std::string serialize_dataset(const DatasetSplit& ds) {
  std::string out;
  out.reserve((ds.train.size() + ds.val.size()) * 4096 + 1024);
  out += kDatasetFormat;
  out += '\n';
  ojson header;
  header["format_version"] = kDatasetFormat;
  header["seed"] = ds.seed;
  header["n_train"] = int64_t(ds.train.size());
  header["n_val"] = int64_t(ds.val.size());
  header["generator_config"] = generator_config_to_json(ds.config);
  out += header.dump();
  out += '\n';
  for (const Scenario& s : ds.train) {
    out += scenario_to_json(s).dump();
    out += '\n';
  }
  for (const Scenario& s : ds.val) {
    out += scenario_to_json(s).dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const DatasetSplit& ds, const std::string& path) {
  write_text_file(path, serialize_dataset(ds));
}

DatasetSplit load_dataset(const std::string& path) {
  const std::string text = read_text_file(path);
  const std::vector<std::string_view> lines = split_lines(text);
  require(lines.size() >= 2, ErrClass::ParseError,
          "dataset file too short: " + path);
  require(lines[0] == kDatasetFormat, ErrClass::VersionMismatch,
          "expected dataset format '" + std::string(kDatasetFormat) +
              "', found '" + std::string(lines[0]) + "'");

  const ojson header = parse_json(std::string(lines[1]), "dataset header");
  reject_unknown_keys(
      header, {"format_version", "seed", "n_train", "n_val", "generator_config"},
      "dataset header");
  require(get_or<std::string>(header, "format_version", "") == kDatasetFormat,
          ErrClass::VersionMismatch, "dataset header format_version mismatch");

  DatasetSplit ds;
  ds.seed = header.at("seed").get<uint64_t>();
  ds.config = generator_config_from_json(header.at("generator_config"));
  const int64_t n_train = header.at("n_train").get<int64_t>();
  const int64_t n_val = header.at("n_val").get<int64_t>();

  size_t records = 0;
  for (size_t i = 2; i < lines.size(); ++i)
    if (!lines[i].empty()) ++records;
  if (records != size_t(n_train + n_val))
    fail(ErrClass::DsCountMismatch,
         "dataset header declares " + std::to_string(n_train + n_val) +
             " records but file holds " + std::to_string(records));

  ds.train.reserve(size_t(n_train));
  ds.val.reserve(size_t(n_val));
  size_t seen = 0;
  for (size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    Scenario s =
        scenario_from_json(parse_json(std::string(lines[i]), "dataset record"),
                           i + 1);
    if (seen < size_t(n_train))
      ds.train.push_back(std::move(s));
    else
      ds.val.push_back(std::move(s));
    ++seen;
  }
  for (const Scenario& s : ds.train)
    require(s.anomaly_tag == Tag::nominal, ErrClass::ParseError,
            "train split contains an anomaly tag");
  return ds;
}

}  // namespace specflow
