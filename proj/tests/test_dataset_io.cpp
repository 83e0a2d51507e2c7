#include "doctest.h"

#include <cstdio>
#include <string>

#include "specflow/dataset_io.hpp"
#include "specflow/io.hpp"

using namespace specflow;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path("/tmp/specflow_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

DatasetSplit tiny_dataset() {
  GeneratorConfig cfg;
  cfg.n_train = 12;
  cfg.n_val = 25;
  cfg.val_anomaly_frac = 0.08;
  return build_dataset(cfg, 99);
}

}  // namespace

TEST_SUITE("dataset_io") {

TEST_CASE("save and load round-trips every double exactly") {
  DatasetSplit ds = tiny_dataset();
  TempFile f("ds_roundtrip.jsonl");
  save_dataset(ds, f.path);
  DatasetSplit back = load_dataset(f.path);

  REQUIRE(back.train.size() == ds.train.size());
  REQUIRE(back.val.size() == ds.val.size());
  CHECK(back.seed == ds.seed);
  for (size_t i = 0; i < ds.val.size(); ++i) {
    CHECK(back.val[i].seed == ds.val[i].seed);
    CHECK(back.val[i].anomaly_tag == ds.val[i].anomaly_tag);
    for (size_t p = 0; p < ds.val[i].future.size(); ++p) {
      CHECK(back.val[i].future[p].x == ds.val[i].future[p].x);
      CHECK(back.val[i].future[p].y == ds.val[i].future[p].y);
    }
    for (size_t p = 0; p < ds.val[i].context.history.size(); ++p) {
      CHECK(back.val[i].context.history[p].vx == ds.val[i].context.history[p].vx);
      CHECK(back.val[i].context.history[p].heading ==
            ds.val[i].context.history[p].heading);
    }
  }

  SUBCASE("re-serialization is byte-identical") {
    CHECK(serialize_dataset(back) == serialize_dataset(ds));
  }
}

TEST_CASE("equal config and seed serialize byte-identically") {
  GeneratorConfig cfg;
  cfg.n_train = 8;
  cfg.n_val = 13;
  CHECK(serialize_dataset(build_dataset(cfg, 7)) ==
        serialize_dataset(build_dataset(cfg, 7)));
}

TEST_CASE("unknown version line is rejected") {
  DatasetSplit ds = tiny_dataset();
  std::string text = serialize_dataset(ds);
  text.replace(0, std::string(kDatasetFormat).size(), "specflow-ds-v9");
  TempFile f("ds_badversion.jsonl");
  write_text_file(f.path, text);
  CHECK_THROWS_WITH_AS(load_dataset(f.path),
                       doctest::Contains("specflow-ds-v9"), SpecError);
  try {
    load_dataset(f.path);
  } catch (const SpecError& e) {
    CHECK(e.cls() == ErrClass::VersionMismatch);
  }
}

TEST_CASE("edited header count raises DS_COUNT_MISMATCH") {
  DatasetSplit ds = tiny_dataset();
  std::string text = serialize_dataset(ds);
  const std::string needle = "\"n_val\":25";
  const size_t at = text.find(needle);
  REQUIRE(at != std::string::npos);
  text.replace(at, needle.size(), "\"n_val\":26");
  TempFile f("ds_badcount.jsonl");
  write_text_file(f.path, text);
  try {
    load_dataset(f.path);
    FAIL("expected DS_COUNT_MISMATCH");
  } catch (const SpecError& e) {
    CHECK(e.cls() == ErrClass::DsCountMismatch);
  }
}

TEST_CASE("generator config json round-trip rejects unknown keys") {
  GeneratorConfig cfg;
  ojson j = generator_config_to_json(cfg);
  GeneratorConfig back = generator_config_from_json(j);
  CHECK(back.speed_max == cfg.speed_max);
  CHECK(back.jitter_sigma == cfg.jitter_sigma);

  j["not_a_knob"] = 3;
  CHECK_THROWS_AS(generator_config_from_json(j), SpecError);
}

}  // TEST_SUITE
