#include "specflow/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "specflow/errors.hpp"
#include "specflow/io.hpp"
#include "specflow/jsonutil.hpp"

namespace specflow {

const char* trigger_name(Trigger t) {
  switch (t) {
    case Trigger::none: return "none";
    case Trigger::hard_brake: return "hard_brake";
    case Trigger::high_yaw_rate: return "high_yaw_rate";
  }
  fail(ErrClass::BadInput, "unknown trigger value");
}

GoldenLabel golden_label(const std::vector<Vec2>& future_m, double dt) {
  require(future_m.size() >= 3, ErrClass::BadInput,
          "labeling needs at least three trajectory points");
  require(dt > 0.0, ErrClass::BadInput, "labeling needs a positive timestep");

  const std::vector<double> v = segment_speeds(future_m, dt);
  double vmax = 0.0;
  for (double s : v) vmax = std::max(vmax, s);
  require(vmax <= 120.0, ErrClass::BadInput,
          "scale guard: speeds above 120 m/s, coordinates are not meters");
  require(vmax == 0.0 || vmax >= 0.001, ErrClass::BadInput,
          "scale guard: a moving trajectory below 0.001 m/s, coordinates "
          "are not meters");

  GoldenLabel g;
  g.min_accel = 0.0;
  for (size_t i = 0; i + 1 < v.size(); ++i)
    g.min_accel = std::min(g.min_accel, (v[i + 1] - v[i]) / dt);

  const std::vector<double> h = segment_headings(future_m);
  g.max_yaw_rate = 0.0;
  for (size_t i = 0; i + 1 < h.size(); ++i)
    g.max_yaw_rate = std::max(g.max_yaw_rate, std::abs(h[i + 1] - h[i]) / dt);

  if (g.min_accel < kHardBrakeAccel)
    g.trigger = Trigger::hard_brake;
  else if (g.max_yaw_rate > kHighYawRate)
    g.trigger = Trigger::high_yaw_rate;
  else
    g.trigger = Trigger::none;
  g.is_critical = g.trigger != Trigger::none;
  return g;
}

std::vector<ScoredScenario> label_scored(
    const std::vector<Scenario>& scenarios,
    const std::vector<ScoreResult>& results) {
  require(scenarios.size() == results.size(), ErrClass::BadInput,
          "scenario and result counts disagree");
  std::vector<ScoredScenario> out;
  out.reserve(scenarios.size());
  for (size_t i = 0; i < scenarios.size(); ++i) {
    ScoredScenario s;
    s.scenario = scenarios[i];
    s.log_likelihood = results[i].log_likelihood;
    s.score = results[i].score;
    s.label = golden_label(scaled(scenarios[i].future, kScaleMeters));
    out.push_back(std::move(s));
  }
  return out;
}

AucResult auc_roc(std::vector<std::pair<double, bool>> scores) {
  int64_t np = 0;
  for (const auto& s : scores) np += s.second ? 1 : 0;
  const int64_t nn = int64_t(scores.size()) - np;
  require(np > 0 && nn > 0, ErrClass::BadInput,
          "AUC needs both classes present");

  std::sort(scores.begin(), scores.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // rank statistic: tie groups get their average rank
  const size_t n = scores.size();
  double rank_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    int64_t gp = 0;
    while (j < n && scores[j].first == scores[i].first) {
      gp += scores[j].second ? 1 : 0;
      ++j;
    }
    rank_pos += 0.5 * double(i + 1 + j) * double(gp);
    i = j;
  }
  AucResult r;
  r.auc = (rank_pos - 0.5 * double(np) * double(np + 1)) /
          (double(np) * double(nn));

  // threshold sweep, descending: positive when score >= threshold
  r.roc.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  int64_t tp = 0;
  int64_t fp = 0;
  size_t k = n;
  while (k > 0) {
    size_t j = k;
    const double s = scores[k - 1].first;
    while (j > 0 && scores[j - 1].first == s) {
      if (scores[j - 1].second)
        ++tp;
      else
        ++fp;
      --j;
    }
    r.roc.push_back({double(fp) / double(nn), double(tp) / double(np), s});
    k = j;
  }
  return r;
}

double trapezoid_area(const std::vector<RocPoint>& roc) {
  double a = 0.0;
  for (size_t i = 0; i + 1 < roc.size(); ++i)
    a += 0.5 * (roc[i].tpr + roc[i + 1].tpr) * (roc[i + 1].fpr - roc[i].fpr);
  return a;
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

GapResult gap_analysis(const std::vector<ScoredScenario>& scored) {
  GapResult g;

  std::vector<double> nominal_scores;
  for (const ScoredScenario& s : scored)
    if (s.scenario.anomaly_tag == Tag::nominal)
      nominal_scores.push_back(s.score);
  g.fpr10_threshold = std::numeric_limits<double>::infinity();
  if (!nominal_scores.empty()) {
    std::sort(nominal_scores.begin(), nominal_scores.end());
    const double n = double(nominal_scores.size());
    size_t idx = size_t(std::ceil(0.9 * n));
    idx = std::min(std::max<size_t>(idx, 1), nominal_scores.size()) - 1;
    g.fpr10_threshold = nominal_scores[idx];
  }

  for (int t = 0; t < kTagCount; ++t) {
    GapRow row;
    row.tag = Tag(t);
    std::vector<double> tag_scores;
    int64_t hits = 0;
    int64_t flagged = 0;
    for (const ScoredScenario& s : scored) {
      if (s.scenario.anomaly_tag != Tag(t)) continue;
      ++row.count;
      tag_scores.push_back(s.score);
      hits += s.label.is_critical ? 1 : 0;
      flagged += s.score > g.fpr10_threshold ? 1 : 0;
    }
    if (row.count > 0) {
      row.heuristic_hit_rate = double(hits) / double(row.count);
      row.median_score = median_of(tag_scores);
      row.score_hit_rate = double(flagged) / double(row.count);
    }
    g.table.push_back(row);
  }

  std::vector<size_t> order(scored.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scored[a].log_likelihood != scored[b].log_likelihood)
      return scored[a].log_likelihood < scored[b].log_likelihood;
    return scored[a].scenario.seed < scored[b].scenario.seed;
  });
  for (size_t i = 0; i < order.size() && i < 5; ++i) {
    const ScoredScenario& s = scored[order[i]];
    g.top5.push_back({s.scenario.seed, s.scenario.anomaly_tag,
                      s.log_likelihood});
  }
  return g;
}

DistResult distribution_export(const std::vector<ScoredScenario>& scored,
                               int bins) {
  require(bins >= 1, ErrClass::BadInput, "histogram needs at least one bin");
  DistResult d;
  d.hist.nominal.assign(size_t(bins), 0);
  d.hist.critical.assign(size_t(bins), 0);
  if (scored.empty()) {
    d.hist.width = 1.0;
    return d;
  }
  double lo = scored[0].log_likelihood;
  double hi = lo;
  for (const ScoredScenario& s : scored) {
    lo = std::min(lo, s.log_likelihood);
    hi = std::max(hi, s.log_likelihood);
  }
  d.hist.lo = lo;
  d.hist.width = (hi - lo) / double(bins);
  if (!(d.hist.width > 0.0)) d.hist.width = 1.0;
  for (const ScoredScenario& s : scored) {
    size_t idx = std::min(size_t((s.log_likelihood - lo) / d.hist.width),
                          size_t(bins) - 1);
    if (s.label.is_critical) {
      ++d.hist.critical[idx];
      if (!d.ceiling_defined || s.log_likelihood > d.safety_ceiling) {
        d.safety_ceiling = s.log_likelihood;
        d.ceiling_defined = true;
      }
    } else {
      ++d.hist.nominal[idx];
    }
  }
  return d;
}

EvalReport evaluate(const std::vector<ScoredScenario>& scored, int bins) {
  EvalReport r;
  std::vector<std::pair<double, bool>> flow;
  std::vector<std::pair<double, bool>> base;
  flow.reserve(scored.size());
  base.reserve(scored.size());
  for (const ScoredScenario& s : scored) {
    flow.push_back({s.score, s.label.is_critical});
    base.push_back({-s.label.min_accel, s.label.is_critical});
    r.n_total += 1;
    r.n_critical += s.label.is_critical ? 1 : 0;
  }
  AucResult a = auc_roc(std::move(flow));
  r.auc_roc = a.auc;
  r.roc = std::move(a.roc);
  r.baseline_auc = auc_roc(std::move(base)).auc;
  r.gap = gap_analysis(scored);
  r.dist = distribution_export(scored, bins);
  return r;
}

std::string report_json(const EvalReport& r) {
  ojson j;
  j["format_version"] = "specflow-report-v1";
  j["auc_roc"] = r.auc_roc;
  j["baseline"] = {{"score", "neg_min_longitudinal_accel"},
                   {"auc_roc", r.baseline_auc}};
  if (r.dist.ceiling_defined)
    j["safety_ceiling"] = r.dist.safety_ceiling;
  else
    j["safety_ceiling"] = nullptr;
  j["counts"] = {{"total", r.n_total},
                 {"critical", r.n_critical},
                 {"nominal", r.n_total - r.n_critical}};
  j["fpr10_threshold"] = r.gap.fpr10_threshold;
  ojson rows = ojson::array();
  for (const GapRow& row : r.gap.table) {
    ojson o;
    o["tag"] = tag_name(row.tag);
    o["count"] = row.count;
    o["heuristic_hit_rate"] = row.heuristic_hit_rate;
    o["median_score"] = row.median_score;
    o["score_hit_rate"] = row.score_hit_rate;
    rows.push_back(o);
  }
  j["gap_table"] = rows;
  ojson top = ojson::array();
  for (const Discovery& d : r.gap.top5) {
    ojson o;
    o["seed"] = d.seed;
    o["tag"] = tag_name(d.tag);
    o["log_likelihood"] = d.log_likelihood;
    top.push_back(o);
  }
  j["top5"] = top;
  return "specflow-report-v1\n" + j.dump(2) + "\n";
}

std::string roc_csv(const std::vector<RocPoint>& roc) {
  std::string s = "fpr,tpr,threshold\n";
  for (const RocPoint& p : roc) {
    s += fmt_double(p.fpr);
    s += ',';
    s += fmt_double(p.tpr);
    s += ',';
    s += fmt_double(p.threshold);
    s += '\n';
  }
  return s;
}

std::string hist_csv(const Histogram& h) {
  std::string s = "bin_lo,bin_hi,nominal,critical\n";
  for (size_t i = 0; i < h.nominal.size(); ++i) {
    s += fmt_double(h.lo + double(i) * h.width);
    s += ',';
    s += fmt_double(h.lo + double(i + 1) * h.width);
    s += ',';
    s += std::to_string(h.nominal[i]);
    s += ',';
    s += std::to_string(h.critical[i]);
    s += '\n';
  }
  return s;
}

std::string gap_csv(const GapResult& g) {
  std::string s = "tag,count,heuristic_hit_rate,median_score,score_hit_rate\n";
  for (const GapRow& row : g.table) {
    s += tag_name(row.tag);
    s += ',';
    s += std::to_string(row.count);
    s += ',';
    s += fmt_double(row.heuristic_hit_rate);
    s += ',';
    s += fmt_double(row.median_score);
    s += ',';
    s += fmt_double(row.score_hit_rate);
    s += '\n';
  }
  return s;
}

}  // namespace specflow
