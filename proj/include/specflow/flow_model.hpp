#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "specflow/jsonutil.hpp"
#include "specflow/linalg.hpp"
#include "specflow/trajectory.hpp"

namespace specflow {

inline constexpr const char* kCkptFormat = "specflow-ckpt-v1";

// Velocity field v(z, t, context) on the whitened latent space. Residual
// MLP head over [z, time embedding, encoded context, raw goal skip]; the
// goal skip keeps lane intent visible to the head even when the encoder
// bottleneck is weak early in training.
struct ModelConfig {
  int k = 12;
  int hidden = 256;
  int enc_hidden = 128;
  int ctx_dim = 64;
  int n_blocks = 3;
  int t_freqs = 4;  // sin/cos pairs at frequencies pi, 2pi, 4pi, 8pi

  int t_dim() const { return 2 * t_freqs; }
  int ctx_in() const { return kHistoryLen * 5 + kGoalPoints * 2; }
  int goal_dim() const { return kGoalPoints * 2; }
  int head_in() const { return k + t_dim() + ctx_dim + goal_dim(); }

  void validate() const;
  ojson to_json() const;
  static ModelConfig from_json(const ojson& j);
};

// Weights stored fan_in x fan_out so the batched forward is plain X*W;
// biases are 1 x fan_out rows. entries() is the one canonical tensor
// order: checkpoints, optimizer state, and gradient reduction all key
// off it.
struct FlowParams {
  Matrix enc_w1, enc_b1, enc_w2, enc_b2;
  Matrix in_w, in_b;
  std::vector<Matrix> blk;  // per block: w1, b1, w2, b2
  Matrix out_w, out_b;

  static FlowParams shaped(const ModelConfig& cfg);  // all zeros
  std::vector<std::pair<std::string, Matrix*>> entries();
  std::vector<std::pair<std::string, const Matrix*>> entries() const;
  size_t count() const;  // total scalar parameters
};

struct FlowModel {
  ModelConfig cfg;
  FlowParams p;

  // Fan-in-scaled uniform init; the output layer starts at zero so the
  // untrained field is exactly v = 0.
  static FlowModel init(const ModelConfig& cfg, uint64_t seed);
};

// [sin(2^j pi t), cos(2^j pi t)] pairs; distinct at t = 0 and t = 1.
void t_embed(double t, int freqs, double* out);

// Context rows ready for the encoder: [history frames | goal points].
struct BatchedContext {
  Matrix ctx_in;  // B x ctx_in()
  Matrix a1;      // B x enc_hidden, tanh activation (kept for backward)
  Matrix c;       // B x ctx_dim
  Matrix goal;    // B x goal_dim()
};

BatchedContext encode_context(const FlowModel& m,
                              const std::vector<const SceneContext*>& ctx);

// Forward intermediates for one batch; reused across steps to avoid
// reallocation. Valid until the next forward call.
struct FlowTrace {
  Matrix u;               // B x head_in
  std::vector<Matrix> x;  // n_blocks+1 of B x hidden
  std::vector<Matrix> t;  // n_blocks of B x hidden
  Matrix v;               // B x k
};

// v rows for z rows (B x k) at per-sample times t (size B).
const Matrix& flow_forward(const FlowModel& m, const Matrix& z, const Vector& t,
                           const BatchedContext& ctx, FlowTrace& tr);

// Reverse pass from seed dv (B x k). Adds parameter gradients into g.
// Context gradients flow through the encoder; z gradients are not needed
// by any caller and are dropped.
void flow_backward(const FlowModel& m, const BatchedContext& ctx,
                   const FlowTrace& tr, const Matrix& dv, FlowParams& g);

// Forward-mode tangents: s holds B*dirs rows, row b*dirs+j a latent-space
// direction for sample b. dv_out row b*dirs+j = (dv/dz) s. Time and
// context are held fixed. Also fills the primal v.
void flow_tangents(const FlowModel& m, const Matrix& z, const Vector& t,
                   const BatchedContext& ctx, const Matrix& s, int dirs,
                   Matrix& v_out, Matrix& dv_out);

// Jacobian dv/dz for one sample via k tangent columns.
Matrix flow_jacobian(const FlowModel& m, const Vector& z, double t,
                     const SceneContext& ctx);

Vector flow_velocity_single(const FlowModel& m, const Vector& z, double t,
                            const SceneContext& ctx);

// Checkpoint: version line, JSON header (model config, basis hash hex,
// opaque training echo), then one block per tensor with 17-significant-
// digit values. Any structural damage after a good version line reports
// CKPT_CORRUPT.
struct Checkpoint {
  FlowModel model;
  uint64_t basis_hash = 0;
  ojson train_echo;  // informational only
};

std::string serialize_checkpoint(const FlowModel& m, uint64_t basis_hash,
                                 const ojson& train_echo);
void save_checkpoint(const std::string& path, const FlowModel& m,
                     uint64_t basis_hash, const ojson& train_echo);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace specflow
