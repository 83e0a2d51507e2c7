#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "specflow/likelihood.hpp"
#include "specflow/trajectory.hpp"

namespace specflow {

// Criticality thresholds on meter-scale futures: braking below -5 m/s^2 or
// yaw rate above 1.5 rad/s marks a scenario as kinematically critical.
inline constexpr double kHardBrakeAccel = -5.0;
inline constexpr double kHighYawRate = 1.5;

enum class Trigger { none, hard_brake, high_yaw_rate };

const char* trigger_name(Trigger t);

struct GoldenLabel {
  bool is_critical = false;  // holds exactly when trigger != none
  Trigger trigger = Trigger::none;
  double min_accel = 0.0;     // most negative speed derivative, m/s^2
  double max_yaw_rate = 0.0;  // largest |heading derivative|, rad/s
};

// Labels one future polyline in meters: longitudinal acceleration from
// finite-differenced segment speeds, yaw rate from unwrapped segment
// headings. A scale guard rejects inputs whose speeds cannot be meters
// (above 120 m/s, or below 0.001 m/s while the path moves at all).
GoldenLabel golden_label(const std::vector<Vec2>& future_m, double dt = kDt);

struct ScoredScenario {
  Scenario scenario;
  double log_likelihood = 0.0;
  double score = 0.0;  // -log_likelihood
  GoldenLabel label;
};

// De-normalizes futures to meters, labels them, and joins scoring results.
std::vector<ScoredScenario> label_scored(
    const std::vector<Scenario>& scenarios,
    const std::vector<ScoreResult>& results);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // classify positive when score >= threshold
};

struct AucResult {
  double auc = 0.0;           // rank statistic, ties count one half
  std::vector<RocPoint> roc;  // threshold sweep over distinct scores
};

// scores: (anomaly score, in positive class). Throws BAD_INPUT when either
// class is empty. The trapezoid area under .roc equals .auc by construction.
AucResult auc_roc(std::vector<std::pair<double, bool>> scores);

double trapezoid_area(const std::vector<RocPoint>& roc);

struct GapRow {
  Tag tag = Tag::nominal;
  int64_t count = 0;
  double heuristic_hit_rate = 0.0;  // fraction golden-labeled critical
  double median_score = 0.0;
  double score_hit_rate = 0.0;  // fraction above the 10%-nominal-FPR cut
};

struct Discovery {
  uint64_t seed = 0;
  Tag tag = Tag::nominal;
  double log_likelihood = 0.0;
};

struct GapResult {
  std::vector<GapRow> table;    // one row per tag in declaration order
  std::vector<Discovery> top5;  // lowest log-likelihoods, ascending
  double fpr10_threshold = 0.0;
};

// Per-tag detection table. The score threshold is the 90th percentile
// (nearest rank) of nominal-tag scores, so nominal rows sit near a 10%
// hit rate by construction; rows of absent tags report zero.
GapResult gap_analysis(const std::vector<ScoredScenario>& scored);

struct Histogram {
  double lo = 0.0;
  double width = 0.0;
  std::vector<int64_t> nominal;   // golden-negative class per bin
  std::vector<int64_t> critical;  // golden-positive class per bin
};

struct DistResult {
  Histogram hist;
  double safety_ceiling = 0.0;  // max critical-class log-likelihood
  bool ceiling_defined = false;
};

// Fixed-width log-likelihood bins spanning the observed range, counted per
// golden class. The ceiling is undefined when no scenario is critical.
DistResult distribution_export(const std::vector<ScoredScenario>& scored,
                               int bins = 40);

struct EvalReport {
  double auc_roc = 0.0;       // positive class: golden-labeled criticals
  double baseline_auc = 0.0;  // same labels, score = -min longitudinal accel
  std::vector<RocPoint> roc;
  GapResult gap;
  DistResult dist;
  int64_t n_total = 0;
  int64_t n_critical = 0;
};

EvalReport evaluate(const std::vector<ScoredScenario>& scored, int bins = 40);

std::string report_json(const EvalReport& r);
std::string roc_csv(const std::vector<RocPoint>& roc);
std::string hist_csv(const Histogram& h);
std::string gap_csv(const GapResult& g);

}  // namespace specflow
