#include "specflow/likelihood.hpp"

#include <chrono>
#include <cmath>
#include <cstddef>

#include "specflow/errors.hpp"
#include "specflow/io.hpp"
#include "specflow/parallel.hpp"
#include "specflow/rng.hpp"

namespace specflow {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr int kScoreChunk = 32;  // scenarios integrated in lockstep

double log_p0(const double* z, int k) {
  return -0.5 * double(k) * kLog2Pi - 0.5 * dot(z, z, k);
}

// One RK4 stage evaluation: velocity rows plus per-probe trace estimates.
// For the exact method the probe block of sample b is the identity, so the
// "estimate" dv(b*dirs+j, j) sums to the true trace.
struct StageEval {
  Matrix v;        // B x k
  Matrix dv;       // B*dirs x k
  Matrix est;      // B x dirs, directional divergence estimates
};

void eval_stage(const FlowModel& m, const Matrix& z, double t,
                const BatchedContext& bc, const Matrix& s, int dirs, bool exact,
                StageEval& ev) {
  const int bn = z.rows;
  Vector tv(static_cast<size_t>(bn), t);
  flow_tangents(m, z, tv, bc, s, dirs, ev.v, ev.dv);
  if (ev.est.rows != bn || ev.est.cols != dirs) ev.est = Matrix(bn, dirs);
  for (int b = 0; b < bn; ++b) {
    double* er = ev.est.row(b);
    for (int p = 0; p < dirs; ++p) {
      const int r = b * dirs + p;
      er[p] = exact ? ev.dv(r, p) : dot(s.row(r), ev.dv.row(r), z.cols);
    }
  }
}

// Backward solve for one lockstep chunk. z holds the data latents on
// entry and the base-distribution latents on exit. ell accumulates the
// per-probe log-mass change; div_integral = -mean_p ell_p at t=0.
void backward_chunk(const FlowModel& m, Matrix& z, const BatchedContext& bc,
                    const Matrix& s, int dirs, bool exact, int steps,
                    Matrix& ell) {
  const int bn = z.rows;
  const int k = z.cols;
  const double h = -1.0 / double(steps);
  ell = Matrix(bn, dirs);

  StageEval e1, e2, e3, e4;
  Matrix zs(bn, k);
  for (int n = 0; n < steps; ++n) {
    const double t = 1.0 + h * double(n);
    eval_stage(m, z, t, bc, s, dirs, exact, e1);

    for (size_t i = 0; i < z.a.size(); ++i) zs.a[i] = z.a[i] + 0.5 * h * e1.v.a[i];
    eval_stage(m, zs, t + 0.5 * h, bc, s, dirs, exact, e2);

    for (size_t i = 0; i < z.a.size(); ++i) zs.a[i] = z.a[i] + 0.5 * h * e2.v.a[i];
    eval_stage(m, zs, t + 0.5 * h, bc, s, dirs, exact, e3);

    for (size_t i = 0; i < z.a.size(); ++i) zs.a[i] = z.a[i] + h * e3.v.a[i];
    eval_stage(m, zs, t + h, bc, s, dirs, exact, e4);

    const double w = h / 6.0;
    for (size_t i = 0; i < z.a.size(); ++i)
      z.a[i] += w * (e1.v.a[i] + 2.0 * e2.v.a[i] + 2.0 * e3.v.a[i] + e4.v.a[i]);
    for (size_t i = 0; i < ell.a.size(); ++i)
      ell.a[i] +=
          w * (e1.est.a[i] + 2.0 * e2.est.a[i] + 2.0 * e3.est.a[i] + e4.est.a[i]);

    for (double v : z.a)
      require(std::isfinite(v), ErrClass::NumericFailure,
              "latent state left the finite range at step " + std::to_string(n) +
                  " of " + std::to_string(steps));
  }
}

Matrix exact_seed(int bn, int k) {
  Matrix s(bn * k, k);
  for (int b = 0; b < bn; ++b)
    for (int j = 0; j < k; ++j) s(b * k + j, j) = 1.0;
  return s;
}

}  // namespace

void OdeOptions::validate() const {
  require(steps >= 1 && steps <= 100000, ErrClass::BadConfig,
          "ode steps must lie in [1, 100000]");
  require(trace == "exact" || trace == "hutchinson", ErrClass::BadConfig,
          "trace method must be 'exact' or 'hutchinson'");
  require(probes >= 1 && probes <= 100000, ErrClass::BadConfig,
          "probe count must lie in [1, 100000]");
  require(probe_dist == "rademacher" || probe_dist == "gaussian",
          ErrClass::BadConfig, "probe_dist must be 'rademacher' or 'gaussian'");
}

std::vector<ScoreResult> score_batch(const FlowModel& m, const SpectralBasis& b,
                                     const std::vector<Scenario>& scenarios,
                                     const OdeOptions& opts, int threads) {
  opts.validate();
  require(m.cfg.k == b.k, ErrClass::BasisMismatch,
          "model latent width does not match the basis");
  const int n = int(scenarios.size());
  require(n > 0, ErrClass::BadInput, "nothing to score");
  threads = resolve_threads(threads);
  const int k = b.k;
  const bool exact = opts.trace == "exact";
  const int dirs = exact ? k : opts.probes;

  std::vector<ScoreResult> out(static_cast<size_t>(n));
  const int chunks = (n + kScoreChunk - 1) / kScoreChunk;

  run_chunked(n, chunks, threads, [&](int chunk, int lo, int hi) {
    (void)chunk;
    const int bn = hi - lo;
    if (bn <= 0) return;

    Matrix z(bn, k);
    std::vector<const SceneContext*> ptrs(static_cast<size_t>(bn));
    for (int i = 0; i < bn; ++i) {
      const Scenario& sc = scenarios[size_t(lo + i)];
      Vector zl = project(b, flatten(sc.future));
      for (int j = 0; j < k; ++j) z(i, j) = zl[size_t(j)];
      ptrs[size_t(i)] = &sc.context;
    }
    BatchedContext bc = encode_context(m, ptrs);

    Matrix s;
    if (exact) {
      s = exact_seed(bn, k);
    } else {
      s = Matrix(bn * dirs, k);
      for (int i = 0; i < bn; ++i) {
        Rng rng(mix_seed(opts.probe_seed, scenarios[size_t(lo + i)].seed));
        for (int p = 0; p < dirs; ++p) {
          double* row = s.row(i * dirs + p);
          for (int j = 0; j < k; ++j)
            row[j] = opts.probe_dist == "gaussian" ? rng.normal()
                                                   : rng.rademacher();
        }
      }
    }

    Matrix ell;
    backward_chunk(m, z, bc, s, dirs, exact, opts.steps, ell);

    for (int i = 0; i < bn; ++i) {
      ScoreResult& r = out[size_t(lo + i)];
      double div, se;
      if (exact) {
        // identity probes: the estimate row already sums stagewise traces
        double total = 0.0;
        for (int j = 0; j < k; ++j) total += ell(i, j);
        div = total;
        se = 0.0;
      } else {
        double mean = 0.0;
        for (int p = 0; p < dirs; ++p) mean += ell(i, p);
        mean /= double(dirs);
        double var = 0.0;
        for (int p = 0; p < dirs; ++p) {
          const double d = ell(i, p) - mean;
          var += d * d;
        }
        se = dirs > 1 ? std::sqrt(var / double(dirs - 1) / double(dirs)) : 0.0;
        div = mean;
      }
      // backward ell holds minus the forward divergence integral
      r.div_integral = -div;
      r.z0_norm = std::sqrt(dot(z.row(i), z.row(i), k));
      r.log_likelihood = log_p0(z.row(i), k) - r.div_integral;
      r.score = -r.log_likelihood;
      r.trace_se = se;
      r.steps = opts.steps;
      r.method = opts.trace;
    }
  });
  return out;
}

ScoreResult score_scenario(const FlowModel& m, const SpectralBasis& b,
                           const Scenario& s, const OdeOptions& opts) {
  return score_batch(m, b, {s}, opts, 1).front();
}

Vector integrate_forward(const FlowModel& m, const Vector& z0,
                         const SceneContext& ctx, int steps) {
  require(steps >= 1, ErrClass::BadConfig, "ode steps must be positive");
  const int k = m.cfg.k;
  require(int(z0.size()) == k, ErrClass::BadInput, "latent has wrong dimension");
  BatchedContext bc = encode_context(m, {&ctx});
  FlowTrace tr;
  Matrix z(1, k);
  for (int j = 0; j < k; ++j) z(0, j) = z0[size_t(j)];
  Matrix zs(1, k);
  const double h = 1.0 / double(steps);
  auto velocity = [&](const Matrix& zz, double t) {
    flow_forward(m, zz, Vector{t}, bc, tr);
    return tr.v;
  };
  for (int n = 0; n < steps; ++n) {
    const double t = h * double(n);
    Matrix v1 = velocity(z, t);
    for (int j = 0; j < k; ++j) zs(0, j) = z(0, j) + 0.5 * h * v1(0, j);
    Matrix v2 = velocity(zs, t + 0.5 * h);
    for (int j = 0; j < k; ++j) zs(0, j) = z(0, j) + 0.5 * h * v2(0, j);
    Matrix v3 = velocity(zs, t + 0.5 * h);
    for (int j = 0; j < k; ++j) zs(0, j) = z(0, j) + h * v3(0, j);
    Matrix v4 = velocity(zs, t + h);
    for (int j = 0; j < k; ++j)
      z(0, j) += h / 6.0 * (v1(0, j) + 2.0 * v2(0, j) + 2.0 * v3(0, j) + v4(0, j));
    for (int j = 0; j < k; ++j)
      require(std::isfinite(z(0, j)), ErrClass::NumericFailure,
              "latent state left the finite range at step " + std::to_string(n) +
                  " of " + std::to_string(steps));
  }
  Vector out(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) out[size_t(j)] = z(0, j);
  return out;
}

std::string scores_csv(const std::vector<Scenario>& scenarios,
                       const std::vector<ScoreResult>& results) {
  require(scenarios.size() == results.size(), ErrClass::BadInput,
          "scenario and result counts disagree");
  std::string s =
      "seed,anomaly_tag,log_likelihood,score,z0_norm,steps,method\n";
  for (size_t i = 0; i < results.size(); ++i) {
    const ScoreResult& r = results[i];
    s += std::to_string(scenarios[i].seed);
    s += ',';
    s += tag_name(scenarios[i].anomaly_tag);
    s += ',';
    s += fmt_double(r.log_likelihood);
    s += ',';
    s += fmt_double(r.score);
    s += ',';
    s += fmt_double(r.z0_norm);
    s += ',';
    s += std::to_string(r.steps);
    s += ',';
    s += r.method;
    s += '\n';
  }
  return s;
}

std::vector<SweepRow> ode_sweep(const FlowModel& m, const SpectralBasis& b,
                                const std::vector<Scenario>& scenarios,
                                const std::vector<int>& grid,
                                const OdeOptions& base, int threads) {
  require(!grid.empty(), ErrClass::BadConfig, "ode sweep grid is empty");
  int max_steps = 0;
  for (int g : grid) {
    require(g >= 1, ErrClass::BadConfig, "ode sweep grid entries must be positive");
    max_steps = std::max(max_steps, g);
  }
  const int ref_steps = 2 * max_steps;

  auto run_at = [&](int steps, SweepRow& row) {
    OdeOptions o = base;
    o.steps = steps;
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<ScoreResult> res = score_batch(m, b, scenarios, o, threads);
    const auto t1 = std::chrono::steady_clock::now();
    row.steps = steps;
    row.ms_per_sample = std::chrono::duration<double, std::milli>(t1 - t0).count() /
                        double(scenarios.size());
    double mean = 0.0;
    for (const ScoreResult& r : res) mean += r.log_likelihood;
    row.mean_ll = mean / double(res.size());
    row.dev_variance = 0.0;  // filled by the caller once the reference is known
    std::vector<double> lls(res.size());
    for (size_t i = 0; i < res.size(); ++i) lls[i] = res[i].log_likelihood;
    return lls;
  };

  SweepRow ref_row;
  std::vector<double> ref_ll = run_at(ref_steps, ref_row);

  std::vector<SweepRow> rows;
  for (int g : grid) {
    SweepRow row;
    std::vector<double> lls = run_at(g, row);
    double mean_dev = 0.0;
    for (size_t i = 0; i < lls.size(); ++i) mean_dev += lls[i] - ref_ll[i];
    mean_dev /= double(lls.size());
    double var = 0.0;
    for (size_t i = 0; i < lls.size(); ++i) {
      const double d = lls[i] - ref_ll[i] - mean_dev;
      var += d * d;
    }
    row.dev_variance = lls.size() > 1 ? var / double(lls.size() - 1) : 0.0;
    rows.push_back(row);
  }
  rows.push_back(ref_row);
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "steps,mean_ll,dev_variance,ms_per_sample\n";
  for (const SweepRow& r : rows) {
    s += std::to_string(r.steps);
    s += ',';
    s += fmt_double(r.mean_ll);
    s += ',';
    s += fmt_double(r.dev_variance);
    s += ',';
    s += fmt_double(r.ms_per_sample);
    s += '\n';
  }
  return s;
}

}  // namespace specflow
