#include "specflow/cfm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <numeric>

#include "specflow/complexity.hpp"
#include "specflow/errors.hpp"
#include "specflow/io.hpp"
#include "specflow/parallel.hpp"
#include "specflow/rng.hpp"

namespace specflow {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void zero_params(FlowParams& p) {
  for (auto& [name, m] : p.entries()) std::fill(m->a.begin(), m->a.end(), 0.0);
}

void add_params(const FlowParams& src, FlowParams& dst) {
  auto se = src.entries();
  auto de = dst.entries();
  for (size_t i = 0; i < se.size(); ++i)
    axpy(1.0, se[i].second->a.data(), de[i].second->a.data(),
         int(se[i].second->a.size()));
}

double params_norm(const FlowParams& p) {
  double ssq = 0.0;
  for (auto& [name, m] : p.entries())
    ssq += dot(m->a.data(), m->a.data(), int(m->a.size()));
  return std::sqrt(ssq);
}

void scale_params(FlowParams& p, double s) {
  for (auto& [name, m] : p.entries())
    for (double& v : m->a) v *= s;
}

// Per-sample hybrid terms and the dL/dv seed rows, shared by the training
// loop and hybrid_eval so a gradient check of one covers the other. The
// loss seen by sample i is (w/B)(||v-u||^2 + lam rmse_m) with the decoded
// completion zhat = z_t + (1-t) v read through the basis.
void hybrid_sample_terms(const SpectralBasis& basis, const double* zt_row,
                         const double* v_row, const double* u_row,
                         const double* truth_flat, double t, double w, int bn,
                         double lam, double* dt_row, double* dc_row,
                         double* flow_out, double* rmse_out) {
  const int k = basis.k;
  const int d = basis.D;
  const double rmse_factor = kScaleMeters / std::sqrt(double(kHorizon));

  double flow_i = 0.0;
  for (int j = 0; j < k; ++j) {
    const double dvu = v_row[j] - u_row[j];
    flow_i += dvu * dvu;
  }

  Vector zhat(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j)
    zhat[size_t(j)] = zt_row[j] + (1.0 - t) * v_row[j];
  Vector xhat = reconstruct(basis, zhat);
  double rsq = 0.0;
  for (int j = 0; j < d; ++j) {
    xhat[size_t(j)] -= truth_flat[j];
    rsq += xhat[size_t(j)] * xhat[size_t(j)];
  }
  const double rn = std::sqrt(rsq);
  const double rmse_m = rmse_factor * rn;

  const double coord_gain =
      rn > 1e-12 ? (w / double(bn)) * lam * (1.0 - t) * rmse_factor / rn : 0.0;
  for (int j = 0; j < k; ++j) {
    const double br =
        dot(basis.basis.row(j), xhat.data(), d) * basis.scales[size_t(j)];
    dc_row[j] = coord_gain * br;
    dt_row[j] = (w / double(bn)) * 2.0 * (v_row[j] - u_row[j]) + dc_row[j];
  }
  *flow_out = flow_i;
  *rmse_out = rmse_m;
}

}  // namespace

void TrainConfig::validate() const {
  require(epochs >= 1 && epochs <= 100000, ErrClass::BadConfig,
          "epochs must lie in [1, 100000]");
  require(batch_size >= 1 && batch_size <= 65536, ErrClass::BadConfig,
          "batch_size must lie in [1, 65536]");
  require(lr_init > 0.0 && lr_init <= 1.0, ErrClass::BadConfig,
          "lr_init must lie in (0, 1]");
  require(lr_floor >= 0.0 && lr_floor <= lr_init, ErrClass::BadConfig,
          "lr_floor must lie in [0, lr_init]");
  require(weight_decay >= 0.0 && weight_decay < 1.0, ErrClass::BadConfig,
          "weight_decay must lie in [0, 1)");
  require(clip_norm > 0.0, ErrClass::BadConfig, "clip_norm must be positive");
  require(sigma_min >= 0.0 && sigma_min <= 0.1, ErrClass::BadConfig,
          "sigma_min must lie in [0, 0.1]");
  require(lambda_coord >= 0.0 && lambda_coord <= 100.0, ErrClass::BadConfig,
          "lambda_coord must lie in [0, 100]");
  require(alpha >= 0.0 && alpha <= 1.0, ErrClass::BadConfig,
          "alpha must lie in [0, 1]");
  require(coord_decode == "one_step", ErrClass::BadConfig,
          "coord_decode must be 'one_step'");
}

ojson TrainConfig::to_json() const {
  ojson j;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["lr_init"] = lr_init;
  j["lr_floor"] = lr_floor;
  j["weight_decay"] = weight_decay;
  j["clip_norm"] = clip_norm;
  j["sigma_min"] = sigma_min;
  j["lambda_coord"] = lambda_coord;
  j["weighted"] = weighted;
  j["alpha"] = alpha;
  j["seed"] = seed;
  j["coord_decode"] = coord_decode;
  return j;
}

TrainConfig TrainConfig::from_json(const ojson& j) {
  reject_unknown_keys(j,
                      {"epochs", "batch_size", "lr_init", "lr_floor",
                       "weight_decay", "clip_norm", "sigma_min", "lambda_coord",
                       "weighted", "alpha", "seed", "coord_decode"},
                      "train config");
  TrainConfig c;
  c.epochs = get_or(j, "epochs", c.epochs);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.lr_init = get_or(j, "lr_init", c.lr_init);
  c.lr_floor = get_or(j, "lr_floor", c.lr_floor);
  c.weight_decay = get_or(j, "weight_decay", c.weight_decay);
  c.clip_norm = get_or(j, "clip_norm", c.clip_norm);
  c.sigma_min = get_or(j, "sigma_min", c.sigma_min);
  c.lambda_coord = get_or(j, "lambda_coord", c.lambda_coord);
  c.weighted = get_or(j, "weighted", c.weighted);
  c.alpha = get_or(j, "alpha", c.alpha);
  c.seed = get_or(j, "seed", c.seed);
  c.coord_decode = get_or(j, "coord_decode", c.coord_decode);
  c.validate();
  return c;
}

double cosine_lr(int epoch, int total_epochs, double init, double floor) {
  require(total_epochs >= 1 && epoch >= 0 && epoch < total_epochs,
          ErrClass::BadInput, "epoch index outside schedule");
  if (total_epochs == 1) return init;
  const double phase = 3.14159265358979323846 * double(epoch) /
                       double(total_epochs - 1);
  return floor + 0.5 * (init - floor) * (1.0 + std::cos(phase));
}

void ot_endpoint(const double* z0, const double* z1, double t, double sigma_min,
                 int k, double* zt, double* target) {
  const double a = 1.0 - (1.0 - sigma_min) * t;
  for (int j = 0; j < k; ++j) {
    zt[j] = a * z0[j] + t * z1[j];
    target[j] = z1[j] - (1.0 - sigma_min) * z0[j];
  }
}

TrainResult train_flow(const std::vector<Scenario>& train,
                       const SpectralBasis& basis, const ModelConfig& mcfg,
                       const TrainConfig& tcfg, int threads,
                       const std::function<void(const EpochStats&)>& on_epoch) {
  require(!train.empty(), ErrClass::BadInput, "training split is empty");
  mcfg.validate();
  tcfg.validate();
  require(mcfg.k == basis.k, ErrClass::BadConfig,
          "model latent width must match the basis component count");
  threads = resolve_threads(threads);

  const int n = int(train.size());
  const int k = basis.k;
  const int d = basis.D;

  // per-scenario precomputation: latents, flat futures, raw weights
  Matrix z1(n, k);
  Matrix flats(n, d);
  Vector raw_w(size_t(n), 1.0);
  for (int i = 0; i < n; ++i) {
    Vector flat = flatten(train[size_t(i)].future);
    Vector z = project(basis, flat);
    for (int j = 0; j < k; ++j) z1(i, j) = z[size_t(j)];
    double* fr = flats.row(i);
    for (int j = 0; j < d; ++j) fr[j] = flat[size_t(j)];
    if (tcfg.weighted)
      raw_w[size_t(i)] =
          complexity_weight(scaled(train[size_t(i)].future, kScaleMeters),
                            tcfg.alpha, kDt)
              .weight;
  }

  TrainResult out;
  out.model = FlowModel::init(mcfg, tcfg.seed);
  FlowModel& model = out.model;

  FlowParams m_state = FlowParams::shaped(mcfg);
  FlowParams v_state = FlowParams::shaped(mcfg);
  FlowParams g_total = FlowParams::shaped(mcfg);
  FlowParams g_coord = FlowParams::shaped(mcfg);
  std::vector<FlowParams> gt_chunk, gc_chunk;
  std::vector<FlowTrace> traces(static_cast<size_t>(kReduceChunks));
  for (int c = 0; c < kReduceChunks; ++c) {
    gt_chunk.push_back(FlowParams::shaped(mcfg));
    gc_chunk.push_back(FlowParams::shaped(mcfg));
  }

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  Rng draw(mix_seed(tcfg.seed, 0xd7a3));
  int64_t step = 0;
  double ema = -1.0;
  const double lam = tcfg.lambda_coord;
  const double sig = tcfg.sigma_min;

  for (int e = 0; e < tcfg.epochs; ++e) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const double lr = cosine_lr(e, tcfg.epochs, tcfg.lr_init, tcfg.lr_floor);
    Rng perm(mix_seed(tcfg.seed, 0xe90c00ULL + uint64_t(e)));
    perm.shuffle(order);

    double ep_flow = 0.0, ep_rmse = 0.0, ep_gnorm = 0.0;
    double ep_fshare = 0.0, ep_cshare = 0.0, ep_maxpost = 0.0;
    int ep_steps = 0;

    for (int start = 0; start < n; start += tcfg.batch_size) {
      const int bn = std::min(tcfg.batch_size, n - start);

      // slot-ordered draws: one t and one k-vector z0 per sample per step
      Matrix z0(bn, k);
      Vector tv(static_cast<size_t>(bn));
      for (int i = 0; i < bn; ++i) {
        tv[size_t(i)] = draw.uniform();
        double* zr = z0.row(i);
        for (int j = 0; j < k; ++j) zr[j] = draw.normal();
      }

      Vector wbar(static_cast<size_t>(bn), 1.0);
      if (tcfg.weighted) {
        double wsum = 0.0;
        for (int i = 0; i < bn; ++i)
          wsum += raw_w[size_t(order[size_t(start + i)])];
        require(wsum > 0.0, ErrClass::NumericFailure,
                "batch weight sum is not positive");
        for (int i = 0; i < bn; ++i)
          wbar[size_t(i)] =
              raw_w[size_t(order[size_t(start + i)])] * double(bn) / wsum;
      }

      for (int c = 0; c < kReduceChunks; ++c) {
        zero_params(gt_chunk[size_t(c)]);
        zero_params(gc_chunk[size_t(c)]);
      }
      std::vector<double> ch_flow(size_t(kReduceChunks), 0.0);
      std::vector<double> ch_rmse(size_t(kReduceChunks), 0.0);
      std::vector<double> ch_hyb(size_t(kReduceChunks), 0.0);

      run_chunked(bn, kReduceChunks, threads, [&](int chunk, int lo, int hi) {
        const int cb = hi - lo;
        if (cb <= 0) return;
        std::vector<const SceneContext*> ptrs(static_cast<size_t>(cb));
        Matrix zt(cb, k), u(cb, k);
        Vector tt(static_cast<size_t>(cb));
        for (int i = 0; i < cb; ++i) {
          const int g = order[size_t(start + lo + i)];
          ptrs[size_t(i)] = &train[size_t(g)].context;
          tt[size_t(i)] = tv[size_t(lo + i)];
          ot_endpoint(z0.row(lo + i), z1.row(g), tt[size_t(i)], sig, k,
                      zt.row(i), u.row(i));
        }
        BatchedContext bc = encode_context(model, ptrs);
        FlowTrace& tr = traces[size_t(chunk)];
        const Matrix& v = flow_forward(model, zt, tt, bc, tr);

        Matrix dv_total(cb, k), dv_coord(cb, k);
        for (int i = 0; i < cb; ++i) {
          const int g = order[size_t(start + lo + i)];
          const double w = wbar[size_t(lo + i)];
          double flow_i = 0.0, rmse_m = 0.0;
          hybrid_sample_terms(basis, zt.row(i), v.row(i), u.row(i),
                              flats.row(g), tt[size_t(i)], w, bn, lam,
                              dv_total.row(i), dv_coord.row(i), &flow_i,
                              &rmse_m);
          ch_flow[size_t(chunk)] += w * flow_i;
          ch_rmse[size_t(chunk)] += rmse_m;
          ch_hyb[size_t(chunk)] += w * (flow_i + lam * rmse_m);
        }
        flow_backward(model, bc, tr, dv_total, gt_chunk[size_t(chunk)]);
        flow_backward(model, bc, tr, dv_coord, gc_chunk[size_t(chunk)]);
      });

      zero_params(g_total);
      zero_params(g_coord);
      for (int c = 0; c < kReduceChunks; ++c) {
        add_params(gt_chunk[size_t(c)], g_total);
        add_params(gc_chunk[size_t(c)], g_coord);
      }

      // exact per-term norms: g_flow = g_total - g_coord by linearity
      double ssq_flow = 0.0;
      {
        auto te = g_total.entries();
        auto ce = g_coord.entries();
        for (size_t i = 0; i < te.size(); ++i) {
          const auto& ta = te[i].second->a;
          const auto& ca = ce[i].second->a;
          for (size_t j = 0; j < ta.size(); ++j) {
            const double f = ta[j] - ca[j];
            ssq_flow += f * f;
          }
        }
      }
      const double n_flow = std::sqrt(ssq_flow);
      const double n_coord = params_norm(g_coord);
      const double gn = params_norm(g_total);
      const double share_den = n_flow + n_coord;
      const double f_share = share_den > 0.0 ? n_flow / share_den : 0.5;

      double post = gn;
      if (gn > tcfg.clip_norm) {
        scale_params(g_total, tcfg.clip_norm / gn);
        post = params_norm(g_total);
        require(post <= tcfg.clip_norm + 1e-9, ErrClass::NumericFailure,
                "post-clip gradient norm exceeds the bound");
      }

      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, double(step));
      const double bc2 = 1.0 - std::pow(kBeta2, double(step));
      {
        auto pe = model.p.entries();
        auto ge = g_total.entries();
        auto me = m_state.entries();
        auto ve = v_state.entries();
        for (size_t i = 0; i < pe.size(); ++i) {
          auto& pa = pe[i].second->a;
          const auto& ga = ge[i].second->a;
          auto& ma = me[i].second->a;
          auto& va = ve[i].second->a;
          for (size_t j = 0; j < pa.size(); ++j) {
            ma[j] = kBeta1 * ma[j] + (1.0 - kBeta1) * ga[j];
            va[j] = kBeta2 * va[j] + (1.0 - kBeta2) * ga[j] * ga[j];
            const double mhat = ma[j] / bc1;
            const double vhat = va[j] / bc2;
            pa[j] -= lr * (mhat / (std::sqrt(vhat) + kAdamEps) +
                           tcfg.weight_decay * pa[j]);
          }
        }
      }

      double b_flow = 0.0, b_rmse = 0.0, b_hyb = 0.0;
      for (int c = 0; c < kReduceChunks; ++c) {
        b_flow += ch_flow[size_t(c)];
        b_rmse += ch_rmse[size_t(c)];
        b_hyb += ch_hyb[size_t(c)];
      }
      const double batch_hyb = b_hyb / double(bn);
      ema = ema < 0.0 ? batch_hyb : 0.9 * ema + 0.1 * batch_hyb;

      ep_flow += b_flow;
      ep_rmse += b_rmse;
      ep_gnorm += gn;
      ep_fshare += f_share;
      ep_cshare += 1.0 - f_share;
      ep_maxpost = std::max(ep_maxpost, post);
      ++ep_steps;
    }

    EpochStats st;
    st.epoch = e;
    st.flow_loss = ep_flow / double(n);
    st.coord_rmse_m = ep_rmse / double(n);
    st.grad_norm_mean = ep_gnorm / double(ep_steps);
    st.lr = lr;
    st.flow_share = ep_fshare / double(ep_steps);
    st.coord_share = ep_cshare / double(ep_steps);
    st.max_postclip = ep_maxpost;
    st.ema10 = ema;
    st.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - epoch_start)
                     .count();
    out.epochs.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  return out;
}

double hybrid_eval(const FlowModel& model, const SpectralBasis& basis,
                   const std::vector<Scenario>& batch, const Matrix& z0,
                   const Vector& t, const TrainConfig& tcfg, FlowParams* grad) {
  require(!batch.empty(), ErrClass::BadInput, "hybrid_eval needs a batch");
  tcfg.validate();
  require(model.cfg.k == basis.k, ErrClass::BadConfig,
          "model latent width must match the basis component count");
  const int bn = int(batch.size());
  const int k = basis.k;
  const int d = basis.D;
  require(z0.rows == bn && z0.cols == k, ErrClass::BadInput,
          "z0 must be batch x k");
  require(int(t.size()) == bn, ErrClass::BadInput, "t must have batch entries");

  Matrix z1(bn, k), flats(bn, d);
  Vector raw_w(static_cast<size_t>(bn), 1.0);
  for (int i = 0; i < bn; ++i) {
    Vector flat = flatten(batch[size_t(i)].future);
    Vector z = project(basis, flat);
    for (int j = 0; j < k; ++j) z1(i, j) = z[size_t(j)];
    double* fr = flats.row(i);
    for (int j = 0; j < d; ++j) fr[j] = flat[size_t(j)];
    if (tcfg.weighted)
      raw_w[size_t(i)] =
          complexity_weight(scaled(batch[size_t(i)].future, kScaleMeters),
                            tcfg.alpha, kDt)
              .weight;
  }
  Vector wbar(static_cast<size_t>(bn), 1.0);
  if (tcfg.weighted) {
    double wsum = 0.0;
    for (int i = 0; i < bn; ++i) wsum += raw_w[size_t(i)];
    require(wsum > 0.0, ErrClass::NumericFailure,
            "batch weight sum is not positive");
    for (int i = 0; i < bn; ++i)
      wbar[size_t(i)] = raw_w[size_t(i)] * double(bn) / wsum;
  }

  std::vector<const SceneContext*> ptrs(static_cast<size_t>(bn));
  Matrix zt(bn, k), u(bn, k);
  for (int i = 0; i < bn; ++i) {
    ptrs[size_t(i)] = &batch[size_t(i)].context;
    ot_endpoint(z0.row(i), z1.row(i), t[size_t(i)], tcfg.sigma_min, k,
                zt.row(i), u.row(i));
  }
  BatchedContext bc = encode_context(model, ptrs);
  FlowTrace tr;
  const Matrix& v = flow_forward(model, zt, t, bc, tr);

  Matrix dv_total(bn, k), dv_coord(bn, k);
  double hyb = 0.0;
  for (int i = 0; i < bn; ++i) {
    double flow_i = 0.0, rmse_m = 0.0;
    hybrid_sample_terms(basis, zt.row(i), v.row(i), u.row(i), flats.row(i),
                        t[size_t(i)], wbar[size_t(i)], bn, tcfg.lambda_coord,
                        dv_total.row(i), dv_coord.row(i), &flow_i, &rmse_m);
    hyb += wbar[size_t(i)] * (flow_i + tcfg.lambda_coord * rmse_m);
  }
  if (grad) {
    zero_params(*grad);
    flow_backward(model, bc, tr, dv_total, *grad);
  }
  return hyb / double(bn);
}

std::vector<double> per_sample_flow_loss(const FlowModel& model,
                                         const SpectralBasis& basis,
                                         const std::vector<Scenario>& scenarios,
                                         int n_draws, uint64_t seed,
                                         double sigma_min, int threads) {
  require(n_draws >= 1, ErrClass::BadInput, "n_draws must be positive");
  require(sigma_min > 0.0 && sigma_min < 1.0, ErrClass::BadConfig,
          "sigma_min must lie in (0, 1)");
  require(model.cfg.k == basis.k, ErrClass::BadConfig,
          "model latent width must match the basis component count");
  threads = resolve_threads(threads);

  const int n = int(scenarios.size());
  const int k = basis.k;
  std::vector<double> out(static_cast<size_t>(n), 0.0);
  run_chunked(n, kReduceChunks, threads, [&](int chunk, int lo, int hi) {
    (void)chunk;
    FlowTrace tr;
    for (int i = lo; i < hi; ++i) {
      const Scenario& s = scenarios[size_t(i)];
      const Vector z1 = project(basis, flatten(s.future));
      Rng rng(mix_seed(seed, s.seed));
      Matrix z0(n_draws, k), zt(n_draws, k), u(n_draws, k);
      Vector tv(static_cast<size_t>(n_draws));
      for (int p = 0; p < n_draws; ++p) {
        tv[size_t(p)] = rng.uniform();
        double* zr = z0.row(p);
        for (int j = 0; j < k; ++j) zr[j] = rng.normal();
      }
      for (int p = 0; p < n_draws; ++p)
        ot_endpoint(z0.row(p), z1.data(), tv[size_t(p)], sigma_min, k,
                    zt.row(p), u.row(p));
      const std::vector<const SceneContext*> ptrs(
          static_cast<size_t>(n_draws), &s.context);
      BatchedContext bc = encode_context(model, ptrs);
      const Matrix& v = flow_forward(model, zt, tv, bc, tr);
      double acc = 0.0;
      for (int p = 0; p < n_draws; ++p) {
        const double* vr = v.row(p);
        const double* ur = u.row(p);
        for (int j = 0; j < k; ++j) {
          const double dvu = vr[j] - ur[j];
          acc += dvu * dvu;
        }
      }
      out[size_t(i)] = acc / double(n_draws);
    }
  });
  return out;
}

std::string train_report_csv(const std::vector<EpochStats>& epochs) {
  std::string s =
      "epoch,flow_loss,coord_rmse_m,grad_norm_mean,lr,flow_share,coord_share,"
      "wall_ms\n";
  for (const EpochStats& e : epochs) {
    s += std::to_string(e.epoch);
    s += ',';
    s += fmt_double(e.flow_loss);
    s += ',';
    s += fmt_double(e.coord_rmse_m);
    s += ',';
    s += fmt_double(e.grad_norm_mean);
    s += ',';
    s += fmt_double(e.lr);
    s += ',';
    s += fmt_double(e.flow_share);
    s += ',';
    s += fmt_double(e.coord_share);
    s += ',';
    s += fmt_double(e.wall_ms);
    s += '\n';
  }
  return s;
}

std::string weights_csv(const std::vector<Scenario>& scenarios, double alpha,
                        double scale) {
  std::string s = "seed,tau,jerk,weight\n";
  for (const Scenario& sc : scenarios) {
    const ComplexityWeight w = complexity_weight(scaled(sc.future, scale), alpha, kDt);
    s += std::to_string(sc.seed);
    s += ',';
    s += fmt_double(w.tau);
    s += ',';
    s += fmt_double(w.jerk_factor);
    s += ',';
    s += fmt_double(w.weight);
    s += '\n';
  }
  return s;
}

}  // namespace specflow
