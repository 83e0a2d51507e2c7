#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"

#include "specflow/errors.hpp"
#include "specflow/flow_model.hpp"
#include "specflow/io.hpp"
#include "specflow/rng.hpp"
#include "specflow/synth.hpp"

namespace specflow {
namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/specflow_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

SceneContext demo_context(uint64_t seed) {
  GeneratorConfig cfg;
  return generate_expert(seed, cfg).context;
}

// init leaves the output layer zero; tests that need a live field fill it.
void randomize_output_layer(FlowModel& m, uint64_t seed) {
  Rng rng(seed);
  for (double& v : m.p.out_w.a) v = 0.3 * rng.normal();
  for (double& v : m.p.out_b.a) v = 0.1 * rng.normal();
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.k = 4;
  c.hidden = 16;
  c.enc_hidden = 12;
  c.ctx_dim = 6;
  c.n_blocks = 2;
  return c;
}

Vector random_latent(int k, Rng& rng) {
  Vector z(static_cast<size_t>(k));
  for (double& v : z) v = rng.normal();
  return z;
}

TEST_SUITE("flow") {

TEST_CASE("time embedding separates the endpoints") {
  double e0[8], e1[8];
  t_embed(0.0, 4, e0);
  t_embed(1.0, 4, e1);
  double d2 = 0.0;
  for (int i = 0; i < 8; ++i) {
    CHECK(std::abs(e0[i]) <= 1.0);
    CHECK(std::abs(e1[i]) <= 1.0);
    d2 += (e0[i] - e1[i]) * (e0[i] - e1[i]);
  }
  CHECK(std::sqrt(d2) > 1.0);
}

TEST_CASE("initial field is exactly zero") {
  FlowModel m = FlowModel::init(tiny_config(), 42);
  SceneContext ctx = demo_context(3);
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    Vector z = random_latent(4, rng);
    Vector v = flow_velocity_single(m, z, rng.uniform(), ctx);
    for (double x : v) CHECK(x == 0.0);
  }
}

TEST_CASE("init is seed-deterministic") {
  FlowModel a = FlowModel::init(tiny_config(), 42);
  FlowModel b = FlowModel::init(tiny_config(), 42);
  FlowModel c = FlowModel::init(tiny_config(), 43);
  CHECK(serialize_checkpoint(a, 0, {}) == serialize_checkpoint(b, 0, {}));
  CHECK(serialize_checkpoint(a, 0, {}) != serialize_checkpoint(c, 0, {}));
}

TEST_CASE("batched forward matches single-sample calls") {
  FlowModel m = FlowModel::init(tiny_config(), 7);
  randomize_output_layer(m, 8);
  Rng rng(15);
  std::vector<SceneContext> ctx;
  std::vector<const SceneContext*> ptrs;
  for (int b = 0; b < 5; ++b) ctx.push_back(demo_context(100 + uint64_t(b)));
  for (int b = 0; b < 5; ++b) ptrs.push_back(&ctx[size_t(b)]);
  Matrix z(5, 4);
  Vector t(5);
  for (int b = 0; b < 5; ++b) {
    for (int j = 0; j < 4; ++j) z(b, j) = rng.normal();
    t[size_t(b)] = rng.uniform();
  }
  BatchedContext bc = encode_context(m, ptrs);
  FlowTrace tr;
  const Matrix& v = flow_forward(m, z, t, bc, tr);
  for (int b = 0; b < 5; ++b) {
    Vector zb(4);
    for (int j = 0; j < 4; ++j) zb[size_t(j)] = z(b, j);
    Vector vb = flow_velocity_single(m, zb, t[size_t(b)], ctx[size_t(b)]);
    for (int j = 0; j < 4; ++j) CHECK(v(b, j) == vb[size_t(j)]);
  }
}

TEST_CASE("tangent jacobian matches central differences") {
  FlowModel m = FlowModel::init(tiny_config(), 11);
  randomize_output_layer(m, 12);
  SceneContext ctx = demo_context(21);
  Rng rng(31);
  const double eps = 1e-4;
  for (int trial = 0; trial < 4; ++trial) {
    Vector z = random_latent(4, rng);
    const double t = rng.uniform();
    Matrix jac = flow_jacobian(m, z, t, ctx);
    for (int c = 0; c < 4; ++c) {
      Vector zp = z, zm = z;
      zp[size_t(c)] += eps;
      zm[size_t(c)] -= eps;
      Vector vp = flow_velocity_single(m, zp, t, ctx);
      Vector vm = flow_velocity_single(m, zm, t, ctx);
      for (int r = 0; r < 4; ++r) {
        const double fd = (vp[size_t(r)] - vm[size_t(r)]) / (2.0 * eps);
        CHECK(std::abs(jac(r, c) - fd) <
              1e-5 * std::max(1.0, std::abs(fd)) + 1e-7);
      }
    }
  }
}

TEST_CASE("linear construction realizes v equal to A z exactly") {
  ModelConfig cfg;
  cfg.k = 3;
  cfg.hidden = 3;
  cfg.enc_hidden = 4;
  cfg.ctx_dim = 2;
  cfg.n_blocks = 0;
  FlowModel m = FlowModel::init(cfg, 5);
  // head input -> hidden: identity on the z columns, zero elsewhere
  for (double& v : m.p.in_w.a) v = 0.0;
  for (double& v : m.p.in_b.a) v = 0.0;
  for (int j = 0; j < 3; ++j) m.p.in_w(j, j) = 1.0;
  Matrix a(3, 3);
  a(0, 0) = 0.5;
  a(0, 1) = -0.2;
  a(1, 1) = 0.3;
  a(2, 0) = 0.1;
  a(2, 2) = -0.4;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m.p.out_w(c, r) = a(r, c);
  for (double& v : m.p.out_b.a) v = 0.0;

  SceneContext ctx = demo_context(77);
  Rng rng(55);
  for (int trial = 0; trial < 5; ++trial) {
    Vector z = random_latent(3, rng);
    Vector v = flow_velocity_single(m, z, rng.uniform(), ctx);
    for (int r = 0; r < 3; ++r) {
      double want = 0.0;
      for (int c = 0; c < 3; ++c) want += a(r, c) * z[size_t(c)];
      CHECK(std::abs(v[size_t(r)] - want) < 1e-14);
    }
    Matrix jac = flow_jacobian(m, z, 0.3, ctx);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) CHECK(std::abs(jac(r, c) - a(r, c)) < 1e-14);
  }
}

TEST_CASE("backward gradients match central differences of a scalar loss") {
  ModelConfig cfg = tiny_config();
  FlowModel m = FlowModel::init(cfg, 17);
  randomize_output_layer(m, 18);
  Rng rng(19);
  const int B = 3;
  std::vector<SceneContext> ctx;
  for (int b = 0; b < B; ++b) ctx.push_back(demo_context(300 + uint64_t(b)));
  std::vector<const SceneContext*> ptrs;
  for (auto& c : ctx) ptrs.push_back(&c);
  Matrix z(B, cfg.k);
  Vector t(B);
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j < cfg.k; ++j) z(b, j) = rng.normal();
    t[size_t(b)] = rng.uniform();
  }
  // loss = sum_b sum_j w(b,j) v(b,j) with fixed random w
  Matrix w(B, cfg.k);
  for (double& x : w.a) x = rng.normal();

  auto loss_at = [&](FlowModel& model) {
    BatchedContext bc = encode_context(model, ptrs);
    FlowTrace tr;
    const Matrix& v = flow_forward(model, z, t, bc, tr);
    double s = 0.0;
    for (size_t i = 0; i < v.a.size(); ++i) s += w.a[i] * v.a[i];
    return s;
  };

  FlowParams g = FlowParams::shaped(cfg);
  {
    BatchedContext bc = encode_context(m, ptrs);
    FlowTrace tr;
    flow_forward(m, z, t, bc, tr);
    flow_backward(m, bc, tr, w, g);
  }

  auto entries = m.p.entries();
  auto gentries = g.entries();
  Rng pick(23);
  const double eps = 1e-5;
  for (int probe = 0; probe < 60; ++probe) {
    const size_t ti = pick.bounded(entries.size());
    Matrix* pm = entries[ti].second;
    if (pm->a.empty()) continue;
    const size_t pi = pick.bounded(pm->a.size());
    const double saved = pm->a[pi];
    pm->a[pi] = saved + eps;
    const double lp = loss_at(m);
    pm->a[pi] = saved - eps;
    const double lm = loss_at(m);
    pm->a[pi] = saved;
    const double fd = (lp - lm) / (2.0 * eps);
    const double an = gentries[ti].second->a[pi];
    CHECK(std::abs(an - fd) < 1e-5 * std::max(1.0, std::abs(fd)) + 1e-6);
  }
}

TEST_CASE("doubling the seed doubles every gradient exactly") {
  ModelConfig cfg = tiny_config();
  FlowModel m = FlowModel::init(cfg, 27);
  randomize_output_layer(m, 28);
  SceneContext ctx = demo_context(5);
  std::vector<const SceneContext*> ptrs{&ctx, &ctx};
  Matrix z(2, cfg.k);
  Rng rng(29);
  for (double& v : z.a) v = rng.normal();
  Vector t{0.25, 0.75};
  Matrix dv(2, cfg.k);
  for (double& v : dv.a) v = rng.normal();
  Matrix dv2 = dv;
  for (double& v : dv2.a) v *= 2.0;

  BatchedContext bc = encode_context(m, ptrs);
  FlowTrace tr;
  flow_forward(m, z, t, bc, tr);
  FlowParams g1 = FlowParams::shaped(cfg);
  FlowParams g2 = FlowParams::shaped(cfg);
  flow_backward(m, bc, tr, dv, g1);
  flow_backward(m, bc, tr, dv2, g2);
  auto e1 = g1.entries();
  auto e2 = g2.entries();
  for (size_t i = 0; i < e1.size(); ++i)
    for (size_t j = 0; j < e1[i].second->a.size(); ++j)
      CHECK(2.0 * e1[i].second->a[j] == e2[i].second->a[j]);
}

TEST_CASE("goal skip keeps lane intent visible when the encoder is dead") {
  ModelConfig cfg = tiny_config();
  FlowModel m = FlowModel::init(cfg, 33);
  randomize_output_layer(m, 34);
  for (double& v : m.p.enc_w2.a) v = 0.0;
  for (double& v : m.p.enc_b2.a) v = 0.0;

  GeneratorConfig gcfg;
  RouteSpec a;
  a.kind = RouteSpec::Kind::straight;
  a.v0 = 10.0;
  RouteSpec b = a;
  b.kind = RouteSpec::Kind::lane_change;
  b.has_lane_change = true;
  b.lc_offset = 3.0;
  b.lc_t0 = 1.0;
  b.lc_len = 5.0;
  SceneContext ca = scenario_from_route(1, a, gcfg).context;
  SceneContext cb = scenario_from_route(1, b, gcfg).context;

  Rng rng(35);
  Vector z = random_latent(cfg.k, rng);
  Vector va = flow_velocity_single(m, z, 0.5, ca);
  Vector vb = flow_velocity_single(m, z, 0.5, cb);
  double diff = 0.0;
  for (int j = 0; j < cfg.k; ++j) diff += std::abs(va[size_t(j)] - vb[size_t(j)]);
  CHECK(diff > 1e-6);
}

TEST_CASE("checkpoint round trip is exact") {
  ModelConfig cfg = tiny_config();
  FlowModel m = FlowModel::init(cfg, 41);
  randomize_output_layer(m, 42);
  ojson echo;
  echo["epochs"] = 3;
  TempFile f("ckpt_roundtrip.ckpt");
  save_checkpoint(f.path, m, 0xdeadbeefcafe1234ULL, echo);
  Checkpoint ck = load_checkpoint(f.path);

  CHECK(ck.basis_hash == 0xdeadbeefcafe1234ULL);
  CHECK(ck.train_echo["epochs"] == 3);
  CHECK(ck.model.cfg.k == cfg.k);
  CHECK(ck.model.cfg.n_blocks == cfg.n_blocks);
  auto ea = m.p.entries();
  auto eb = ck.model.p.entries();
  REQUIRE(ea.size() == eb.size());
  for (size_t i = 0; i < ea.size(); ++i) {
    REQUIRE(ea[i].second->a.size() == eb[i].second->a.size());
    for (size_t j = 0; j < ea[i].second->a.size(); ++j)
      CHECK(ea[i].second->a[j] == eb[i].second->a[j]);
  }
  CHECK(serialize_checkpoint(ck.model, ck.basis_hash, ck.train_echo) ==
        serialize_checkpoint(m, 0xdeadbeefcafe1234ULL, echo));
}

TEST_CASE("checkpoint rejects damage") {
  ModelConfig cfg = tiny_config();
  FlowModel m = FlowModel::init(cfg, 51);
  const std::string good = serialize_checkpoint(m, 1, {});

  auto expect_class = [](const std::string& text, ErrClass want) {
    TempFile f("ckpt_damage.ckpt");
    write_text_file(f.path, text);
    try {
      (void)load_checkpoint(f.path);
      CHECK(false);
    } catch (const SpecError& e) {
      CHECK(e.cls() == want);
    }
  };

  SUBCASE("foreign version") {
    std::string bad = good;
    bad.replace(0, std::string("specflow-ckpt-v1").size(), "specflow-ckpt-v2");
    expect_class(bad, ErrClass::VersionMismatch);
  }
  SUBCASE("truncated at half") {
    expect_class(good.substr(0, good.size() / 2), ErrClass::CkptCorrupt);
  }
  SUBCASE("truncated just before the end marker") {
    const size_t pos = good.rfind("end ");
    expect_class(good.substr(0, pos), ErrClass::CkptCorrupt);
  }
  SUBCASE("mangled value") {
    std::string bad = good;
    const size_t pos = bad.find("e-", bad.find("tensor "));
    bad.replace(pos, 2, "eX");
    expect_class(bad, ErrClass::CkptCorrupt);
  }
  SUBCASE("trailing garbage") {
    expect_class(good + "extra\n", ErrClass::CkptCorrupt);
  }
}

TEST_CASE("model config validation") {
  ModelConfig bad = tiny_config();
  bad.k = 0;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = tiny_config();
  bad.n_blocks = -1;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  ojson j;
  j["k"] = 4;
  j["surprise"] = 1;
  CHECK_THROWS_AS((void)ModelConfig::from_json(j), SpecError);
}

}  // TEST_SUITE

}  // namespace
}  // namespace specflow
