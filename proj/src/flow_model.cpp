#include "specflow/flow_model.hpp"

#include <charconv>
#include <cmath>
#include <cstddef>

#include "specflow/errors.hpp"
#include "specflow/io.hpp"
#include "specflow/rng.hpp"

namespace specflow {

namespace {

void ensure(Matrix& m, int rows, int cols) {
  if (m.rows != rows || m.cols != cols) {
    m = Matrix(rows, cols);
  } else {
    std::fill(m.a.begin(), m.a.end(), 0.0);
  }
}

void add_bias_rows(Matrix& x, const Matrix& b) {
  for (int r = 0; r < x.rows; ++r) axpy(1.0, b.row(0), x.row(r), x.cols);
}

void tanh_inplace(Matrix& x) {
  for (double& v : x.a) v = std::tanh(v);
}

void colsum_into(const Matrix& x, Matrix& acc) {
  for (int r = 0; r < x.rows; ++r) axpy(1.0, x.row(r), acc.row(0), x.cols);
}

// g += a^T b without materializing the transpose: row r of a scales row
// contributions; accumulation order over r is ascending for every g entry.
void gemm_at_b(const Matrix& a, const Matrix& b, Matrix& g) {
  require(a.rows == b.rows && g.rows == a.cols && g.cols == b.cols,
          ErrClass::BadInput, "transposed accumulate shape mismatch");
  for (int r = 0; r < a.rows; ++r) {
    const double* ar = a.row(r);
    const double* br = b.row(r);
    for (int i = 0; i < a.cols; ++i) axpy(ar[i], br, g.row(i), b.cols);
  }
}

}  // namespace

void ModelConfig::validate() const {
  require(k >= 1 && k <= 64, ErrClass::BadConfig, "model k must lie in [1, 64]");
  require(hidden >= 1 && hidden <= 4096, ErrClass::BadConfig,
          "model hidden width must lie in [1, 4096]");
  require(enc_hidden >= 1 && enc_hidden <= 4096, ErrClass::BadConfig,
          "encoder hidden width must lie in [1, 4096]");
  require(ctx_dim >= 1 && ctx_dim <= 1024, ErrClass::BadConfig,
          "context width must lie in [1, 1024]");
  require(n_blocks >= 0 && n_blocks <= 16, ErrClass::BadConfig,
          "residual block count must lie in [0, 16]");
  require(t_freqs >= 1 && t_freqs <= 16, ErrClass::BadConfig,
          "time embedding pair count must lie in [1, 16]");
}

ojson ModelConfig::to_json() const {
  ojson j;
  j["k"] = k;
  j["hidden"] = hidden;
  j["enc_hidden"] = enc_hidden;
  j["ctx_dim"] = ctx_dim;
  j["n_blocks"] = n_blocks;
  j["t_freqs"] = t_freqs;
  return j;
}

ModelConfig ModelConfig::from_json(const ojson& j) {
  reject_unknown_keys(j, {"k", "hidden", "enc_hidden", "ctx_dim", "n_blocks", "t_freqs"},
                      "model config");
  ModelConfig c;
  c.k = get_or(j, "k", c.k);
  c.hidden = get_or(j, "hidden", c.hidden);
  c.enc_hidden = get_or(j, "enc_hidden", c.enc_hidden);
  c.ctx_dim = get_or(j, "ctx_dim", c.ctx_dim);
  c.n_blocks = get_or(j, "n_blocks", c.n_blocks);
  c.t_freqs = get_or(j, "t_freqs", c.t_freqs);
  c.validate();
  return c;
}

FlowParams FlowParams::shaped(const ModelConfig& cfg) {
  cfg.validate();
  FlowParams p;
  p.enc_w1 = Matrix(cfg.ctx_in(), cfg.enc_hidden);
  p.enc_b1 = Matrix(1, cfg.enc_hidden);
  p.enc_w2 = Matrix(cfg.enc_hidden, cfg.ctx_dim);
  p.enc_b2 = Matrix(1, cfg.ctx_dim);
  p.in_w = Matrix(cfg.head_in(), cfg.hidden);
  p.in_b = Matrix(1, cfg.hidden);
  p.blk.reserve(size_t(cfg.n_blocks) * 4);
  for (int i = 0; i < cfg.n_blocks; ++i) {
    p.blk.push_back(Matrix(cfg.hidden, cfg.hidden));
    p.blk.push_back(Matrix(1, cfg.hidden));
    p.blk.push_back(Matrix(cfg.hidden, cfg.hidden));
    p.blk.push_back(Matrix(1, cfg.hidden));
  }
  p.out_w = Matrix(cfg.hidden, cfg.k);
  p.out_b = Matrix(1, cfg.k);
  return p;
}

std::vector<std::pair<std::string, Matrix*>> FlowParams::entries() {
  std::vector<std::pair<std::string, Matrix*>> e;
  e.emplace_back("enc_w1", &enc_w1);
  e.emplace_back("enc_b1", &enc_b1);
  e.emplace_back("enc_w2", &enc_w2);
  e.emplace_back("enc_b2", &enc_b2);
  e.emplace_back("in_w", &in_w);
  e.emplace_back("in_b", &in_b);
  const size_t nb = blk.size() / 4;
  for (size_t i = 0; i < nb; ++i) {
    const std::string base = "blk" + std::to_string(i) + "_";
    e.emplace_back(base + "w1", &blk[i * 4 + 0]);
    e.emplace_back(base + "b1", &blk[i * 4 + 1]);
    e.emplace_back(base + "w2", &blk[i * 4 + 2]);
    e.emplace_back(base + "b2", &blk[i * 4 + 3]);
  }
  e.emplace_back("out_w", &out_w);
  e.emplace_back("out_b", &out_b);
  return e;
}

std::vector<std::pair<std::string, const Matrix*>> FlowParams::entries() const {
  auto mut = const_cast<FlowParams*>(this)->entries();
  std::vector<std::pair<std::string, const Matrix*>> e;
  e.reserve(mut.size());
  for (auto& [n, m] : mut) e.emplace_back(n, m);
  return e;
}

size_t FlowParams::count() const {
  size_t n = 0;
  for (auto& [name, m] : entries()) n += m->a.size();
  return n;
}

FlowModel FlowModel::init(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  FlowModel m;
  m.cfg = cfg;
  m.p = FlowParams::shaped(cfg);
  Rng rng(mix_seed(seed, 0xf10f));
  auto fill = [&rng](Matrix& w, int fan_in) {
    const double bound = 1.0 / std::sqrt(double(fan_in));
    for (double& v : w.a) v = rng.uniform(-bound, bound);
  };
  fill(m.p.enc_w1, cfg.ctx_in());
  fill(m.p.enc_b1, cfg.ctx_in());
  fill(m.p.enc_w2, cfg.enc_hidden);
  fill(m.p.enc_b2, cfg.enc_hidden);
  fill(m.p.in_w, cfg.head_in());
  fill(m.p.in_b, cfg.head_in());
  for (int i = 0; i < cfg.n_blocks; ++i) {
    fill(m.p.blk[size_t(i) * 4 + 0], cfg.hidden);
    fill(m.p.blk[size_t(i) * 4 + 1], cfg.hidden);
    fill(m.p.blk[size_t(i) * 4 + 2], cfg.hidden);
    fill(m.p.blk[size_t(i) * 4 + 3], cfg.hidden);
  }
  // out_w, out_b stay zero: the initial field is identically zero
  return m;
}

void t_embed(double t, int freqs, double* out) {
  double f = 3.14159265358979323846;
  for (int j = 0; j < freqs; ++j) {
    out[2 * j] = std::sin(f * t);
    out[2 * j + 1] = std::cos(f * t);
    f *= 2.0;
  }
}

BatchedContext encode_context(const FlowModel& m,
                              const std::vector<const SceneContext*>& ctx) {
  const ModelConfig& cfg = m.cfg;
  const int B = int(ctx.size());
  require(B > 0, ErrClass::BadInput, "context batch is empty");
  BatchedContext bc;
  bc.ctx_in = Matrix(B, cfg.ctx_in());
  bc.goal = Matrix(B, cfg.goal_dim());
  for (int b = 0; b < B; ++b) {
    const SceneContext& s = *ctx[size_t(b)];
    require(s.history.size() == size_t(kHistoryLen) &&
                s.goal_lane.size() == size_t(kGoalPoints),
            ErrClass::BadInput, "scene context has wrong history or goal length");
    double* row = bc.ctx_in.row(b);
    for (int i = 0; i < kHistoryLen; ++i) {
      const HistFrame& h = s.history[size_t(i)];
      row[i * 5 + 0] = h.x;
      row[i * 5 + 1] = h.y;
      row[i * 5 + 2] = h.vx;
      row[i * 5 + 3] = h.vy;
      row[i * 5 + 4] = h.heading;
    }
    double* gl = bc.goal.row(b);
    for (int i = 0; i < kGoalPoints; ++i) {
      gl[2 * i + 0] = s.goal_lane[size_t(i)].x;
      gl[2 * i + 1] = s.goal_lane[size_t(i)].y;
      row[kHistoryLen * 5 + 2 * i + 0] = s.goal_lane[size_t(i)].x;
      row[kHistoryLen * 5 + 2 * i + 1] = s.goal_lane[size_t(i)].y;
    }
  }
  bc.a1 = matmul(bc.ctx_in, m.p.enc_w1);
  add_bias_rows(bc.a1, m.p.enc_b1);
  tanh_inplace(bc.a1);
  bc.c = matmul(bc.a1, m.p.enc_w2);
  add_bias_rows(bc.c, m.p.enc_b2);
  return bc;
}

const Matrix& flow_forward(const FlowModel& m, const Matrix& z, const Vector& t,
                           const BatchedContext& ctx, FlowTrace& tr) {
  const ModelConfig& cfg = m.cfg;
  const int B = z.rows;
  require(z.cols == cfg.k, ErrClass::BadInput, "latent batch has wrong width");
  require(int(t.size()) == B && ctx.c.rows == B, ErrClass::BadInput,
          "latent, time, and context batches disagree");

  ensure(tr.u, B, cfg.head_in());
  const int td = cfg.t_dim();
  for (int b = 0; b < B; ++b) {
    double* row = tr.u.row(b);
    const double* zr = z.row(b);
    for (int j = 0; j < cfg.k; ++j) row[j] = zr[j];
    t_embed(t[size_t(b)], cfg.t_freqs, row + cfg.k);
    const double* cr = ctx.c.row(b);
    for (int j = 0; j < cfg.ctx_dim; ++j) row[cfg.k + td + j] = cr[j];
    const double* gr = ctx.goal.row(b);
    for (int j = 0; j < cfg.goal_dim(); ++j)
      row[cfg.k + td + cfg.ctx_dim + j] = gr[j];
  }

  tr.x.resize(size_t(cfg.n_blocks) + 1);
  tr.t.resize(size_t(cfg.n_blocks));
  ensure(tr.x[0], B, cfg.hidden);
  gemm_acc(tr.u, m.p.in_w, tr.x[0]);
  add_bias_rows(tr.x[0], m.p.in_b);

  for (int i = 0; i < cfg.n_blocks; ++i) {
    const Matrix& w1 = m.p.blk[size_t(i) * 4 + 0];
    const Matrix& b1 = m.p.blk[size_t(i) * 4 + 1];
    const Matrix& w2 = m.p.blk[size_t(i) * 4 + 2];
    const Matrix& b2 = m.p.blk[size_t(i) * 4 + 3];
    ensure(tr.t[size_t(i)], B, cfg.hidden);
    gemm_acc(tr.x[size_t(i)], w1, tr.t[size_t(i)]);
    add_bias_rows(tr.t[size_t(i)], b1);
    tanh_inplace(tr.t[size_t(i)]);
    tr.x[size_t(i) + 1] = tr.x[size_t(i)];
    gemm_acc(tr.t[size_t(i)], w2, tr.x[size_t(i) + 1]);
    add_bias_rows(tr.x[size_t(i) + 1], b2);
  }

  ensure(tr.v, B, cfg.k);
  gemm_acc(tr.x[size_t(cfg.n_blocks)], m.p.out_w, tr.v);
  add_bias_rows(tr.v, m.p.out_b);
  return tr.v;
}

void flow_backward(const FlowModel& m, const BatchedContext& ctx,
                   const FlowTrace& tr, const Matrix& dv, FlowParams& g) {
  const ModelConfig& cfg = m.cfg;
  const int B = dv.rows;
  require(dv.cols == cfg.k && tr.u.rows == B, ErrClass::BadInput,
          "gradient seed does not match the forward trace");

  colsum_into(dv, g.out_b);
  gemm_at_b(tr.x[size_t(cfg.n_blocks)], dv, g.out_w);
  Matrix dx = matmul(dv, transpose(m.p.out_w));

  for (int i = cfg.n_blocks - 1; i >= 0; --i) {
    const Matrix& w1 = m.p.blk[size_t(i) * 4 + 0];
    const Matrix& w2 = m.p.blk[size_t(i) * 4 + 2];
    Matrix& gw1 = g.blk[size_t(i) * 4 + 0];
    Matrix& gb1 = g.blk[size_t(i) * 4 + 1];
    Matrix& gw2 = g.blk[size_t(i) * 4 + 2];
    Matrix& gb2 = g.blk[size_t(i) * 4 + 3];
    const Matrix& ti = tr.t[size_t(i)];

    colsum_into(dx, gb2);
    gemm_at_b(ti, dx, gw2);
    Matrix dpre = matmul(dx, transpose(w2));
    for (int r = 0; r < B; ++r) {
      double* dp = dpre.row(r);
      const double* th = ti.row(r);
      for (int j = 0; j < cfg.hidden; ++j) dp[j] *= 1.0 - th[j] * th[j];
    }
    colsum_into(dpre, gb1);
    gemm_at_b(tr.x[size_t(i)], dpre, gw1);
    gemm_acc(dpre, transpose(w1), dx);
  }

  colsum_into(dx, g.in_b);
  gemm_at_b(tr.u, dx, g.in_w);
  Matrix du = matmul(dx, transpose(m.p.in_w));

  // only the encoded-context slice of u feeds trainable inputs upstream
  const int c0 = cfg.k + cfg.t_dim();
  Matrix dc(B, cfg.ctx_dim);
  for (int r = 0; r < B; ++r) {
    const double* src = du.row(r) + c0;
    double* dst = dc.row(r);
    for (int j = 0; j < cfg.ctx_dim; ++j) dst[j] = src[j];
  }

  colsum_into(dc, g.enc_b2);
  gemm_at_b(ctx.a1, dc, g.enc_w2);
  Matrix da1 = matmul(dc, transpose(m.p.enc_w2));
  for (int r = 0; r < B; ++r) {
    double* dp = da1.row(r);
    const double* ah = ctx.a1.row(r);
    for (int j = 0; j < cfg.enc_hidden; ++j) dp[j] *= 1.0 - ah[j] * ah[j];
  }
  colsum_into(da1, g.enc_b1);
  gemm_at_b(ctx.ctx_in, da1, g.enc_w1);
}

void flow_tangents(const FlowModel& m, const Matrix& z, const Vector& t,
                   const BatchedContext& ctx, const Matrix& s, int dirs,
                   Matrix& v_out, Matrix& dv_out) {
  const ModelConfig& cfg = m.cfg;
  const int B = z.rows;
  require(dirs >= 1 && s.rows == B * dirs && s.cols == cfg.k, ErrClass::BadInput,
          "tangent seed batch has wrong shape");

  FlowTrace tr;
  flow_forward(m, z, t, ctx, tr);
  v_out = tr.v;

  // tangents only enter through the z columns of the head input
  Matrix zin(cfg.k, cfg.hidden);
  for (int i = 0; i < cfg.k; ++i) {
    const double* src = m.p.in_w.row(i);
    double* dst = zin.row(i);
    for (int j = 0; j < cfg.hidden; ++j) dst[j] = src[j];
  }

  Matrix dx = matmul(s, zin);
  for (int i = 0; i < cfg.n_blocks; ++i) {
    const Matrix& w1 = m.p.blk[size_t(i) * 4 + 0];
    const Matrix& w2 = m.p.blk[size_t(i) * 4 + 2];
    const Matrix& ti = tr.t[size_t(i)];
    Matrix dpre = matmul(dx, w1);
    for (int r = 0; r < dx.rows; ++r) {
      double* dp = dpre.row(r);
      const double* th = ti.row(r / dirs);
      for (int j = 0; j < cfg.hidden; ++j) dp[j] *= 1.0 - th[j] * th[j];
    }
    gemm_acc(dpre, w2, dx);
  }
  dv_out = matmul(dx, m.p.out_w);
}

Matrix flow_jacobian(const FlowModel& m, const Vector& z, double t,
                     const SceneContext& ctx) {
  const int k = m.cfg.k;
  require(int(z.size()) == k, ErrClass::BadInput, "latent has wrong dimension");
  BatchedContext bc = encode_context(m, {&ctx});
  Matrix zb(1, k);
  for (int j = 0; j < k; ++j) zb(0, j) = z[size_t(j)];
  Matrix v, dv;
  flow_tangents(m, zb, Vector{t}, bc, Matrix::identity(k), k, v, dv);
  Matrix jac(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) jac(r, c) = dv(c, r);
  return jac;
}

Vector flow_velocity_single(const FlowModel& m, const Vector& z, double t,
                            const SceneContext& ctx) {
  const int k = m.cfg.k;
  require(int(z.size()) == k, ErrClass::BadInput, "latent has wrong dimension");
  BatchedContext bc = encode_context(m, {&ctx});
  Matrix zb(1, k);
  for (int j = 0; j < k; ++j) zb(0, j) = z[size_t(j)];
  FlowTrace tr;
  flow_forward(m, zb, Vector{t}, bc, tr);
  Vector v(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) v[size_t(j)] = tr.v(0, j);
  return v;
}

std::string serialize_checkpoint(const FlowModel& m, uint64_t basis_hash,
                                 const ojson& train_echo) {
  ojson header;
  header["format_version"] = kCkptFormat;
  header["model"] = m.cfg.to_json();
  header["basis_hash"] = hex64(basis_hash);
  header["train"] = train_echo.is_null() ? ojson::object() : train_echo;

  std::string out(kCkptFormat);
  out += '\n';
  out += header.dump();
  out += '\n';
  size_t count = 0;
  for (auto& [name, mat] : m.p.entries()) {
    out += "tensor ";
    out += name;
    out += ' ';
    out += std::to_string(mat->rows);
    out += ' ';
    out += std::to_string(mat->cols);
    out += '\n';
    for (int r = 0; r < mat->rows; ++r) {
      const double* row = mat->row(r);
      for (int c = 0; c < mat->cols; ++c) {
        require(std::isfinite(row[c]), ErrClass::NumericFailure,
                "checkpoint tensor '" + name + "' holds a non-finite value");
        if (c) out += ' ';
        out += fmt_double17(row[c]);
      }
      out += '\n';
    }
    count += mat->a.size();
  }
  out += "end " + std::to_string(count) + "\n";
  return out;
}

void save_checkpoint(const std::string& path, const FlowModel& m,
                     uint64_t basis_hash, const ojson& train_echo) {
  write_text_file(path, serialize_checkpoint(m, basis_hash, train_echo));
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string text = read_text_file(path);
  std::vector<std::string_view> lines = split_lines(text);
  require(!lines.empty(), ErrClass::CkptCorrupt, "checkpoint file is empty");
  require(lines[0] == kCkptFormat, ErrClass::VersionMismatch,
          "checkpoint version '" + std::string(lines[0]) + "', expected '" +
              kCkptFormat + "'");
  require(lines.size() >= 2, ErrClass::CkptCorrupt, "checkpoint has no header");

  ojson header = ojson::parse(lines[1], nullptr, false);
  require(!header.is_discarded() && header.is_object(), ErrClass::CkptCorrupt,
          "checkpoint header is not valid JSON");
  reject_unknown_keys(header, {"format_version", "model", "basis_hash", "train"},
                      "checkpoint header", ErrClass::CkptCorrupt);
  for (const char* key : {"format_version", "model", "basis_hash"})
    require(header.contains(key), ErrClass::CkptCorrupt,
            std::string("checkpoint header missing '") + key + "'");
  require(header["format_version"].get<std::string>() == kCkptFormat,
          ErrClass::VersionMismatch, "checkpoint header format_version mismatch");

  Checkpoint ck;
  ck.model.cfg = ModelConfig::from_json(header["model"]);
  ck.model.p = FlowParams::shaped(ck.model.cfg);
  const std::string hash_hex = header["basis_hash"].get<std::string>();
  {
    uint64_t h = 0;
    auto [p, ec] = std::from_chars(hash_hex.data(), hash_hex.data() + hash_hex.size(), h, 16);
    require(ec == std::errc{} && p == hash_hex.data() + hash_hex.size(),
            ErrClass::CkptCorrupt, "checkpoint basis_hash is not hex");
    ck.basis_hash = h;
  }
  if (header.contains("train")) ck.train_echo = header["train"];

  size_t cursor = 2;
  auto next_line = [&]() -> std::string_view {
    require(cursor < lines.size(), ErrClass::CkptCorrupt,
            "checkpoint ends early (truncated?)");
    return lines[cursor++];
  };

  size_t count = 0;
  for (auto& [name, mat] : ck.model.p.entries()) {
    std::vector<std::string_view> head = split_fields(next_line(), ' ');
    require(head.size() == 4 && head[0] == "tensor" && head[1] == name,
            ErrClass::CkptCorrupt, "checkpoint tensor order broken at '" + name + "'");
    int rows = 0, cols = 0;
    auto r1 = std::from_chars(head[2].data(), head[2].data() + head[2].size(), rows);
    auto r2 = std::from_chars(head[3].data(), head[3].data() + head[3].size(), cols);
    require(r1.ec == std::errc{} && r2.ec == std::errc{} && rows == mat->rows &&
                cols == mat->cols,
            ErrClass::CkptCorrupt,
            "checkpoint tensor '" + name + "' shape disagrees with the model config");
    for (int r = 0; r < rows; ++r) {
      std::vector<std::string_view> vals = split_fields(next_line(), ' ');
      require(int(vals.size()) == cols, ErrClass::CkptCorrupt,
              "checkpoint tensor '" + name + "' row has wrong value count");
      double* dst = mat->row(r);
      for (int c = 0; c < cols; ++c) {
        const std::string_view sv = vals[size_t(c)];
        double v = 0.0;
        auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
        require(res.ec == std::errc{} && res.ptr == sv.data() + sv.size() &&
                    std::isfinite(v),
                ErrClass::CkptCorrupt,
                "checkpoint tensor '" + name + "' holds an unreadable value");
        dst[c] = v;
      }
    }
    count += mat->a.size();
  }
  std::vector<std::string_view> tail = split_fields(next_line(), ' ');
  require(tail.size() == 2 && tail[0] == "end" &&
              tail[1] == std::to_string(count),
          ErrClass::CkptCorrupt, "checkpoint end marker missing or wrong");
  while (cursor < lines.size())
    require(lines[cursor++].empty(), ErrClass::CkptCorrupt,
            "checkpoint has trailing garbage");
  return ck;
}

}  // namespace specflow
