#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "specflow/flow_model.hpp"
#include "specflow/jsonutil.hpp"
#include "specflow/spectral.hpp"
#include "specflow/synth.hpp"

namespace specflow {

struct TrainConfig {
  int epochs = 80;
  int batch_size = 128;
  double lr_init = 5e-4;
  double lr_floor = 1e-6;
  double weight_decay = 1e-2;
  double clip_norm = 1.0;
  double sigma_min = 1e-4;
  double lambda_coord = 0.1;
  bool weighted = true;  // complexity weighting of per-sample losses
  double alpha = 0.05;   // jerk-energy exponent coefficient
  uint64_t seed = 1;
  // The coordinate loss decodes a one-step completion z_t + (1-t) v; the
  // field is kept explicit so artifacts record how coordinates were read.
  std::string coord_decode = "one_step";

  void validate() const;
  ojson to_json() const;
  static TrainConfig from_json(const ojson& j);
};

// floor + 0.5 (init - floor)(1 + cos(pi e/(E-1))); E = 1 gives init.
double cosine_lr(int epoch, int total_epochs, double init, double floor);

// Linear interpolant z_t = (1 - (1-sigma) t) z0 + t z1 and its constant
// velocity target u = z1 - (1-sigma) z0.
void ot_endpoint(const double* z0, const double* z1, double t, double sigma_min,
                 int k, double* zt, double* target);

struct EpochStats {
  int epoch = 0;
  double flow_loss = 0.0;     // weighted mean of ||v - u||^2
  double coord_rmse_m = 0.0;  // unweighted mean per-point RMSE, meters
  double grad_norm_mean = 0.0;  // pre-clip total gradient norm, step mean
  double lr = 0.0;
  double flow_share = 0.0;   // step mean of ||g_flow|| /(||g_flow||+||g_coord||)
  double coord_share = 0.0;  // step mean of the complementary share
  double max_postclip = 0.0;
  double ema10 = 0.0;    // EMA (decay 0.9) of the batch hybrid loss
  double wall_ms = 0.0;  // epoch wall time; the one non-deterministic field
};

struct TrainResult {
  FlowModel model;
  std::vector<EpochStats> epochs;
};

// Optimizes the hybrid objective sum_i w_i (||v-u||^2 + lambda rmse_i) / B
// with per-batch-normalized complexity weights. Gradient shares come from
// two reverse passes per batch (combined seed and coordinate-only seed);
// the flow-term gradient is their exact difference. Chunk-keyed gradient
// reduction makes results independent of the worker thread count.
TrainResult train_flow(const std::vector<Scenario>& train,
                       const SpectralBasis& basis, const ModelConfig& mcfg,
                       const TrainConfig& tcfg, int threads,
                       const std::function<void(const EpochStats&)>& on_epoch = {});

// The training objective for one prepared batch at fixed draws: the mean
// over the batch of w_i (||v - u||^2 + lambda rmse_m), with weights
// batch-normalized exactly as in training. Overwrites *grad (pre-shaped by
// the caller) with the analytic parameter gradient when non-null. Shares
// its per-sample arithmetic with train_flow, so finite-difference checks
// of this function validate the training gradient.
double hybrid_eval(const FlowModel& model, const SpectralBasis& basis,
                   const std::vector<Scenario>& batch, const Matrix& z0,
                   const Vector& t, const TrainConfig& tcfg, FlowParams* grad);

// Mean ||v - u||^2 per scenario over n_draws seeded (t, z0) pairs; no
// weighting, no coordinate term. Draws are keyed by (seed, scenario.seed),
// so an A/B model comparison under one seed probes identical points.
std::vector<double> per_sample_flow_loss(const FlowModel& model,
                                         const SpectralBasis& basis,
                                         const std::vector<Scenario>& scenarios,
                                         int n_draws, uint64_t seed,
                                         double sigma_min, int threads);

// epoch,flow_loss,coord_rmse_m,grad_norm_mean,lr,flow_share,coord_share,wall_ms
std::string train_report_csv(const std::vector<EpochStats>& epochs);

// seed,tau,jerk,weight rows of raw (pre-normalization) complexity weights.
std::string weights_csv(const std::vector<Scenario>& scenarios, double alpha,
                        double scale);

}  // namespace specflow
