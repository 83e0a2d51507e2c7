#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"

#include "specflow/errors.hpp"
#include "specflow/evaluation.hpp"
#include "specflow/io.hpp"
#include "specflow/jsonutil.hpp"
#include "specflow/rng.hpp"
#include "specflow/synth.hpp"

namespace specflow {
namespace {

std::vector<Vec2> straight_line(int n, double step) {
  std::vector<Vec2> p;
  for (int i = 0; i < n; ++i) p.push_back({double(i) * step, 0.0});
  return p;
}

ScoredScenario fab(uint64_t seed, Tag tag, double ll, bool crit) {
  ScoredScenario s;
  s.scenario.seed = seed;
  s.scenario.anomaly_tag = tag;
  s.log_likelihood = ll;
  s.score = -ll;
  s.label.is_critical = crit;
  s.label.trigger = crit ? Trigger::hard_brake : Trigger::none;
  s.label.min_accel = crit ? -7.0 : -1.0;
  return s;
}

// 100 nominal rows with distinct scores plus 20 rows for each anomaly tag
// except corner_cut; anomaly scores all clear the nominal range.
std::vector<ScoredScenario> fabricated_val() {
  std::vector<ScoredScenario> v;
  for (int i = 0; i < 100; ++i)
    v.push_back(fab(uint64_t(i), Tag::nominal, -double(i) * 0.01, false));
  for (int t = 1; t < kTagCount; ++t) {
    if (Tag(t) == Tag::corner_cut) continue;
    const bool crit = Tag(t) != Tag::lane_violation;
    for (int i = 0; i < 20; ++i) {
      const double score = 5.0 + double(t) * 0.3 + double(i) * 0.01;
      v.push_back(fab(uint64_t(t) * 1000 + uint64_t(i), Tag(t), -score, crit));
    }
  }
  return v;
}

TEST_SUITE("evaluation") {

TEST_CASE("straight constant motion carries no trigger") {
  GoldenLabel g = golden_label(straight_line(80, 1.0));
  CHECK(g.trigger == Trigger::none);
  CHECK_FALSE(g.is_critical);
  CHECK(g.min_accel == 0.0);
  CHECK(g.max_yaw_rate == 0.0);
}

TEST_CASE("brake injections trip the deceleration detector") {
  GeneratorConfig cfg;
  for (uint64_t s = 0; s < 40; ++s) {
    Scenario nom = generate_expert(20000 + s, cfg);
    Scenario x = inject_anomaly(nom, Tag::hard_brake, 31 + s, cfg);
    GoldenLabel g = golden_label(scaled(x.future, kScaleMeters));
    CHECK(g.trigger == Trigger::hard_brake);
    CHECK(g.is_critical);
    CHECK(g.min_accel < -5.0);
  }
}

TEST_CASE("swerve injections trip the yaw detector") {
  GeneratorConfig cfg;
  for (uint64_t s = 0; s < 40; ++s) {
    Scenario nom = generate_expert(21000 + s, cfg);
    Scenario x = inject_anomaly(nom, Tag::swerve, 47 + s, cfg);
    GoldenLabel g = golden_label(scaled(x.future, kScaleMeters));
    CHECK(g.trigger == Trigger::high_yaw_rate);
    CHECK(g.max_yaw_rate > 1.5);
  }
}

TEST_CASE("lane violations stay kinematically invisible") {
  GeneratorConfig cfg;
  int hits = 0;
  for (uint64_t s = 0; s < 40; ++s) {
    Scenario nom = generate_expert(22000 + s, cfg);
    Scenario x = inject_anomaly(nom, Tag::lane_violation, 59 + s, cfg);
    GoldenLabel g = golden_label(scaled(x.future, kScaleMeters));
    hits += g.is_critical ? 1 : 0;
    CHECK(g.is_critical == (g.trigger != Trigger::none));
  }
  CHECK(hits == 0);
}

TEST_CASE("nominal experts never trigger") {
  GeneratorConfig cfg;
  for (uint64_t s = 0; s < 40; ++s) {
    Scenario nom = generate_expert(23000 + s, cfg);
    GoldenLabel g = golden_label(scaled(nom.future, kScaleMeters));
    CHECK(g.trigger == Trigger::none);
  }
}

TEST_CASE("scale guard flags non-meter coordinates") {
  GeneratorConfig cfg;
  Scenario s = generate_expert(24000, cfg);
  // doubly scaled input moves hundreds of meters per step
  CHECK_THROWS_WITH_AS(
      (void)golden_label(scaled(s.future, kScaleMeters * kScaleMeters)),
      doctest::Contains("scale guard"), SpecError);
  // a crawling line far below any real vehicle speed
  CHECK_THROWS_WITH_AS((void)golden_label(straight_line(80, 1e-6)),
                       doctest::Contains("scale guard"), SpecError);
  // exactly stationary input labels cleanly as non-critical
  GoldenLabel g = golden_label(std::vector<Vec2>(80, Vec2{3.0, 4.0}));
  CHECK(g.trigger == Trigger::none);
  // too few points
  CHECK_THROWS_AS((void)golden_label(straight_line(2, 1.0)), SpecError);
}

TEST_CASE("pair counting oracle fixes the rank statistic") {
  // positives 3.0 and 2.0 against negatives 1.0 and 2.5:
  // wins are (3>1), (3>2.5), (2>1); (2<2.5) loses -> 3/4
  AucResult r = auc_roc({{3.0, true}, {2.0, true}, {1.0, false}, {2.5, false}});
  CHECK(r.auc == 0.75);
  CHECK(std::abs(trapezoid_area(r.roc) - r.auc) < 1e-12);

  SUBCASE("perfect separation") {
    AucResult p = auc_roc({{5.0, true}, {4.0, true}, {1.0, false}});
    CHECK(p.auc == 1.0);
  }
  SUBCASE("all ties give one half") {
    AucResult p = auc_roc({{2.0, true}, {2.0, false}, {2.0, true}, {2.0, false}});
    CHECK(p.auc == 0.5);
  }
  SUBCASE("single class input is rejected") {
    CHECK_THROWS_AS((void)auc_roc({{1.0, true}, {2.0, true}}), SpecError);
    CHECK_THROWS_AS((void)auc_roc({{1.0, false}}), SpecError);
  }
  SUBCASE("roc endpoints and monotonicity") {
    CHECK(r.roc.front().fpr == 0.0);
    CHECK(r.roc.front().tpr == 0.0);
    CHECK(r.roc.back().fpr == 1.0);
    CHECK(r.roc.back().tpr == 1.0);
    for (size_t i = 0; i + 1 < r.roc.size(); ++i) {
      CHECK(r.roc[i].fpr <= r.roc[i + 1].fpr);
      CHECK(r.roc[i].threshold > r.roc[i + 1].threshold);
    }
  }
}

TEST_CASE("trapezoid area equals the rank statistic under heavy ties") {
  Rng rng(404);
  std::vector<std::pair<double, bool>> scores;
  for (int i = 0; i < 400; ++i) {
    const double s = std::floor(rng.normal() * 10.0) / 10.0;
    scores.push_back({s, rng.uniform() < 0.3});
  }
  scores.push_back({0.0, true});
  scores.push_back({0.0, false});
  AucResult r = auc_roc(scores);
  CHECK(std::abs(trapezoid_area(r.roc) - r.auc) < 1e-12);
  for (size_t i = 0; i + 1 < r.roc.size(); ++i)
    CHECK(r.roc[i].fpr <= r.roc[i + 1].fpr);
}

TEST_CASE("gap table partitions rows and pins the operating point") {
  std::vector<ScoredScenario> v = fabricated_val();
  GapResult g = gap_analysis(v);
  REQUIRE(g.table.size() == size_t(kTagCount));

  int64_t total = 0;
  for (const GapRow& row : g.table) total += row.count;
  CHECK(total == int64_t(v.size()));

  // nominal scores are 100 distinct values; the nearest-rank 90th percentile
  // leaves exactly ten above the cut
  CHECK(g.table[0].tag == Tag::nominal);
  CHECK(g.table[0].count == 100);
  CHECK(g.table[0].score_hit_rate == 0.10);
  CHECK(g.fpr10_threshold == 0.89);
  CHECK(g.table[0].heuristic_hit_rate == 0.0);

  for (const GapRow& row : g.table) {
    if (row.tag == Tag::nominal) continue;
    if (row.tag == Tag::corner_cut) {
      CHECK(row.count == 0);
      CHECK(row.median_score == 0.0);
      CHECK(row.score_hit_rate == 0.0);
      continue;
    }
    CHECK(row.count == 20);
    CHECK(row.score_hit_rate == 1.0);
    const double expect_hit = row.tag == Tag::lane_violation ? 0.0 : 1.0;
    CHECK(row.heuristic_hit_rate == expect_hit);
  }

  // jitter carries the largest fabricated scores, so the discovery list is
  // its five top rows, lowest log likelihood first
  REQUIRE(g.top5.size() == 5);
  CHECK(g.top5[0].seed == 5019);
  CHECK(g.top5[1].seed == 5018);
  CHECK(g.top5[4].seed == 5015);
  CHECK(g.top5[0].tag == Tag::jitter);
  CHECK(g.top5[0].log_likelihood <= g.top5[4].log_likelihood);
}

TEST_CASE("histogram conserves counts and exposes the ceiling") {
  std::vector<ScoredScenario> v;
  for (int i = 0; i < 10; ++i)
    v.push_back(fab(uint64_t(i), Tag::nominal, double(i), false));
  v.push_back(fab(100, Tag::hard_brake, -5.5, true));
  v.push_back(fab(101, Tag::hard_brake, -3.25, true));
  v.push_back(fab(102, Tag::swerve, -1.0, true));

  DistResult d = distribution_export(v, 10);
  int64_t n = 0;
  int64_t c = 0;
  for (int64_t x : d.hist.nominal) n += x;
  for (int64_t x : d.hist.critical) c += x;
  CHECK(n == 10);
  CHECK(c == 3);
  CHECK(d.ceiling_defined);
  CHECK(d.safety_ceiling == -1.0);
  CHECK(d.hist.lo == -5.5);
  CHECK(d.hist.width == doctest::Approx(1.45).epsilon(1e-12));

  SUBCASE("no critical class leaves the ceiling undefined") {
    std::vector<ScoredScenario> w(v.begin(), v.begin() + 10);
    DistResult e = distribution_export(w, 5);
    CHECK_FALSE(e.ceiling_defined);
  }
  SUBCASE("degenerate range falls back to a single occupied bin") {
    std::vector<ScoredScenario> w;
    for (int i = 0; i < 4; ++i)
      w.push_back(fab(uint64_t(i), Tag::nominal, 2.0, i == 0));
    DistResult e = distribution_export(w, 8);
    CHECK(e.hist.width == 1.0);
    CHECK(e.hist.nominal[0] == 3);
    CHECK(e.hist.critical[0] == 1);
    CHECK(e.safety_ceiling == 2.0);
  }
}

TEST_CASE("report and csv emitters carry the pinned schema") {
  std::vector<ScoredScenario> v = fabricated_val();
  EvalReport r = evaluate(v, 20);

  CHECK(r.auc_roc >= 0.0);
  CHECK(r.auc_roc <= 1.0);
  CHECK(std::abs(trapezoid_area(r.roc) - r.auc_roc) < 1e-12);
  // non-critical lane violations outscore the braking and swerve rows, so
  // the golden-class AUC loses exactly those 800 of 7200 pairs
  CHECK(r.auc_roc == 6400.0 / 7200.0);
  CHECK(r.baseline_auc == 1.0);
  CHECK(r.n_total == int64_t(v.size()));
  CHECK(r.n_critical == 60);

  const std::string rep = report_json(r);
  const std::string version_line = "specflow-report-v1\n";
  REQUIRE(rep.substr(0, version_line.size()) == version_line);
  ojson j = parse_json(rep.substr(version_line.size()), "report");
  CHECK(j["format_version"] == "specflow-report-v1");
  CHECK(j["auc_roc"].get<double>() == r.auc_roc);
  CHECK(j["baseline"]["auc_roc"].get<double>() == r.baseline_auc);
  CHECK(j["safety_ceiling"].get<double>() == r.dist.safety_ceiling);
  CHECK(j["counts"]["total"].get<int64_t>() == r.n_total);
  CHECK(j["gap_table"].size() == size_t(kTagCount));
  CHECK(j["top5"].size() == 5);
  CHECK(j["top5"][0]["seed"].get<uint64_t>() == 5019);

  const std::string roc_text = roc_csv(r.roc);
  auto roc_lines = split_lines(roc_text);
  CHECK(roc_lines[0] == "fpr,tpr,threshold");
  CHECK(roc_lines.size() == r.roc.size() + 1);

  const std::string hist_text = hist_csv(r.dist.hist);
  auto hist_lines = split_lines(hist_text);
  CHECK(hist_lines[0] == "bin_lo,bin_hi,nominal,critical");
  CHECK(hist_lines.size() == 21);

  const std::string gap_text = gap_csv(r.gap);
  auto gap_lines = split_lines(gap_text);
  CHECK(gap_lines[0] == "tag,count,heuristic_hit_rate,median_score,score_hit_rate");
  REQUIRE(gap_lines.size() == size_t(kTagCount) + 1);
  CHECK(split_fields(gap_lines[1], ',')[0] == "nominal");
}

}  // TEST_SUITE

}  // namespace
}  // namespace specflow
