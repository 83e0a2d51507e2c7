#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specflow/flow_model.hpp"
#include "specflow/spectral.hpp"
#include "specflow/synth.hpp"

namespace specflow {

struct OdeOptions {
  int steps = 20;
  std::string trace = "exact";  // "exact" | "hutchinson"
  int probes = 10;
  std::string probe_dist = "rademacher";  // "rademacher" | "gaussian"
  uint64_t probe_seed = 0;

  void validate() const;
};

struct ScoreResult {
  double log_likelihood = 0.0;
  double score = 0.0;  // -log_likelihood, higher = more anomalous
  double z0_norm = 0.0;
  double div_integral = 0.0;  // integral of the field divergence over t
  double trace_se = 0.0;      // probe standard error; 0 for exact trace
  int steps = 0;
  std::string method;
};

// Fixed-step RK4 from t=1 to t=0 on the augmented state (z, log-mass).
// Exact trace propagates k tangents per sample; Hutchinson draws its
// probes once per solve and reuses them at every stage, so per-probe
// divergence integrals (and their standard error) are well defined.
// Scenarios in a batch integrate in lockstep on one shared time grid;
// results are bitwise identical to single-scenario calls.
std::vector<ScoreResult> score_batch(const FlowModel& m, const SpectralBasis& b,
                                     const std::vector<Scenario>& scenarios,
                                     const OdeOptions& opts, int threads);

ScoreResult score_scenario(const FlowModel& m, const SpectralBasis& b,
                           const Scenario& s, const OdeOptions& opts);

// Plain RK4 on z from t=0 to t=1; the inverse of the backward solve up to
// integration error.
Vector integrate_forward(const FlowModel& m, const Vector& z0,
                         const SceneContext& ctx, int steps);

// seed,anomaly_tag,log_likelihood,score,z0_norm,steps,method
std::string scores_csv(const std::vector<Scenario>& scenarios,
                       const std::vector<ScoreResult>& results);

struct SweepRow {
  int steps = 0;
  double mean_ll = 0.0;
  double dev_variance = 0.0;  // variance of (ll - ll_ref) over scenarios
  double ms_per_sample = 0.0;
};

// Scores the scenarios on every grid in `grid` plus a reference grid of
// twice the largest entry (emitted as the final row, deviation zero).
std::vector<SweepRow> ode_sweep(const FlowModel& m, const SpectralBasis& b,
                                const std::vector<Scenario>& scenarios,
                                const std::vector<int>& grid,
                                const OdeOptions& base, int threads);

// steps,mean_ll,dev_variance,ms_per_sample
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace specflow
