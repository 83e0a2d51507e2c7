#include "specflow/cli.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <unordered_map>
#include <utility>

#include "CLI11.hpp"

#include "specflow/cfm.hpp"
#include "specflow/dataset_io.hpp"
#include "specflow/errors.hpp"
#include "specflow/evaluation.hpp"
#include "specflow/io.hpp"
#include "specflow/jsonutil.hpp"
#include "specflow/likelihood.hpp"
#include "specflow/runconfig.hpp"
#include "specflow/spectral.hpp"
#include "specflow/synth.hpp"

namespace specflow {
namespace {

namespace fs = std::filesystem;

void make_dirs(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrClass::IoError,
          "cannot create directory " + dir + ": " + ec.message());
}

void ensure_parent(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) make_dirs(p.parent_path().string());
}

std::string sibling(const std::string& path, const std::string& name) {
  const fs::path p(path);
  if (p.has_parent_path()) return (p.parent_path() / name).string();
  return name;
}

std::vector<double> parse_double_list(const std::string& s,
                                      const std::string& what) {
  std::vector<double> out;
  for (std::string_view f : split_fields(s, ','))
    out.push_back(parse_double(f, what));
  require(!out.empty(), ErrClass::Usage, what + " must not be empty");
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (std::string_view f : split_fields(s, ','))
    out.push_back(int(parse_int(f, what)));
  require(!out.empty(), ErrClass::Usage, what + " must not be empty");
  return out;
}

void echo_config(std::ostream& out, const RunConfig& c) {
  out << "resolved-config: " << c.to_json().dump() << "\n";
}

ojson train_echo_json(const RunConfig& c) {
  ojson t;
  t["model"] = c.model.to_json();
  const ojson tj = c.train.to_json();
  for (const auto& [key, val] : tj.items()) t[key] = val;
  return t;
}

int cmd_generate(const RunConfig& c, const std::string& ds_path,
                 std::ostream& out) {
  const DatasetSplit ds = build_dataset(c.generate, c.seed);
  ensure_parent(ds_path);
  save_dataset(ds, ds_path);
  out << "wrote " << ds_path << " (train " << ds.train.size() << ", val "
      << ds.val.size() << ", seed " << c.seed << ")\n";
  return 0;
}

int cmd_fit(const RunConfig& c, const std::string& ds_path,
            const std::string& out_path, std::ostream& out) {
  const DatasetSplit ds = load_dataset(ds_path);
  std::vector<Vector> flats;
  flats.reserve(ds.train.size());
  for (const Scenario& s : ds.train) flats.push_back(flatten(s.future));
  const SpectralBasis b = fit_basis(flats, c.fit.k);
  ensure_parent(out_path);
  save_basis(b, out_path);
  double cum = 0.0;
  for (double e : b.evr) cum += e;
  out << "wrote " << out_path << " (k " << b.k << ", cumulative evr "
      << fmt_double(cum) << ", hash " << hex64(basis_hash(b)) << ")\n";
  return 0;
}

int cmd_train(const RunConfig& c, const std::string& ds_path,
              const std::string& basis_path, const std::string& ckpt_path,
              const std::string& report_path, const std::string& weights_path,
              int threads, std::ostream& out) {
  const DatasetSplit ds = load_dataset(ds_path);
  const SpectralBasis b = load_basis(basis_path);
  require(b.k == c.model.k, ErrClass::BasisMismatch,
          "basis k and model k disagree");
  const TrainResult tr =
      train_flow(ds.train, b, c.model, c.train, threads,
                 [&](const EpochStats& e) {
                   out << "epoch " << (e.epoch + 1) << "/" << c.train.epochs
                       << " flow_loss=" << fmt_double(e.flow_loss)
                       << " coord_rmse_m=" << fmt_double(e.coord_rmse_m)
                       << " grad_norm=" << fmt_double(e.grad_norm_mean)
                       << " lr=" << fmt_double(e.lr) << "\n"
                       << std::flush;
                 });
  ensure_parent(ckpt_path);
  save_checkpoint(ckpt_path, tr.model, basis_hash(b), train_echo_json(c));
  ensure_parent(report_path);
  write_text_file(report_path, train_report_csv(tr.epochs));
  if (!weights_path.empty()) {
    ensure_parent(weights_path);
    write_text_file(weights_path,
                    weights_csv(ds.train, c.train.alpha, ds.config.scale));
    out << "wrote " << weights_path << "\n";
  }
  out << "wrote " << ckpt_path << " and " << report_path << "\n";
  return 0;
}

// Loads the checkpoint/basis pair, refusing a basis whose hash differs from
// the one the checkpoint was trained against.
std::pair<Checkpoint, SpectralBasis> load_model_pair(
    const std::string& ckpt_path, const std::string& basis_path) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  SpectralBasis b = load_basis(basis_path);
  require(basis_hash(b) == ck.basis_hash, ErrClass::BasisMismatch,
          "checkpoint was trained against a different basis (hash " +
              hex64(ck.basis_hash) + " vs " + hex64(basis_hash(b)) + ")");
  return {std::move(ck), std::move(b)};
}

int cmd_score(const RunConfig& c, const std::string& ckpt_path,
              const std::string& basis_path, const std::string& ds_path,
              const std::string& out_path, int threads, std::ostream& out) {
  const auto [ck, b] = load_model_pair(ckpt_path, basis_path);
  const DatasetSplit ds = load_dataset(ds_path);
  require(!ds.val.empty(), ErrClass::BadInput,
          "dataset has no validation scenarios to score");
  const std::vector<ScoreResult> res =
      score_batch(ck.model, b, ds.val, c.score, threads);
  ensure_parent(out_path);
  write_text_file(out_path, scores_csv(ds.val, res));
  out << "wrote " << out_path << " (" << res.size() << " scenarios, "
      << c.score.trace << " trace, " << c.score.steps << " steps)\n";
  return 0;
}

struct ScoreRow {
  uint64_t seed = 0;
  Tag tag = Tag::nominal;
  double log_likelihood = 0.0;
  double score = 0.0;
};

std::vector<ScoreRow> parse_scores_rows(const std::string& text) {
  const auto lines = split_lines(text);
  require(!lines.empty() &&
              lines[0] ==
                  "seed,anomaly_tag,log_likelihood,score,z0_norm,steps,method",
          ErrClass::ParseError, "scores file header row does not match");
  std::vector<ScoreRow> rows;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_fields(lines[i], ',');
    require(f.size() == 7, ErrClass::ParseError,
            "scores row " + std::to_string(i) + " does not have 7 fields");
    ScoreRow r;
    r.seed = uint64_t(parse_int(f[0], "scores seed"));
    r.tag = tag_from_name(std::string(f[1]));
    r.log_likelihood = parse_double(f[2], "scores log_likelihood");
    r.score = parse_double(f[3], "scores score");
    rows.push_back(r);
  }
  require(!rows.empty(), ErrClass::BadInput, "scores file has no rows");
  return rows;
}

int cmd_eval(const RunConfig& c, const std::string& scores_path,
             const std::string& ds_path, const std::string& report_path,
             std::ostream& out) {
  const DatasetSplit ds = load_dataset(ds_path);
  const std::vector<ScoreRow> rows = parse_scores_rows(read_text_file(scores_path));

  std::unordered_map<uint64_t, size_t> by_seed;
  for (size_t i = 0; i < ds.val.size(); ++i) by_seed[ds.val[i].seed] = i;

  std::vector<ScoredScenario> scored;
  scored.reserve(rows.size());
  for (const ScoreRow& r : rows) {
    const auto it = by_seed.find(r.seed);
    require(it != by_seed.end(), ErrClass::BadInput,
            "scores seed " + std::to_string(r.seed) +
                " has no matching validation scenario");
    const Scenario& sc = ds.val[it->second];
    require(sc.anomaly_tag == r.tag, ErrClass::BadInput,
            "anomaly tag mismatch for seed " + std::to_string(r.seed));
    ScoredScenario s;
    s.scenario = sc;
    s.log_likelihood = r.log_likelihood;
    s.score = r.score;
    s.label = golden_label(scaled(sc.future, ds.config.scale));
    scored.push_back(std::move(s));
  }

  const EvalReport rep = evaluate(scored, c.eval.bins);
  ensure_parent(report_path);
  write_text_file(report_path, report_json(rep));
  write_text_file(sibling(report_path, "roc.csv"), roc_csv(rep.roc));
  write_text_file(sibling(report_path, "hist.csv"), hist_csv(rep.dist.hist));
  write_text_file(sibling(report_path, "gap.csv"), gap_csv(rep.gap));
  out << "wrote " << report_path << " (auc " << fmt_double(rep.auc_roc)
      << ", baseline auc " << fmt_double(rep.baseline_auc) << ", ceiling ";
  if (rep.dist.ceiling_defined)
    out << fmt_double(rep.dist.safety_ceiling);
  else
    out << "absent";
  out << ")\n";
  return 0;
}

int cmd_traverse(const RunConfig& c, const std::string& basis_path, int pc,
                 const std::vector<double>& offsets, const std::string& outdir,
                 std::ostream& out) {
  const SpectralBasis b = load_basis(basis_path);
  require(pc >= 1 && pc <= b.k, ErrClass::BadInput,
          "pc must lie in 1.." + std::to_string(b.k));
  const Vector fixed(static_cast<size_t>(b.k), 0.0);
  const std::vector<Vector> flats = traverse(b, pc - 1, offsets, fixed);
  make_dirs(outdir);
  for (size_t i = 0; i < offsets.size(); ++i) {
    const std::vector<Vec2> pts = unflatten(flats[i]);
    std::string csv = "x_m,y_m\n";
    for (const Vec2& p : pts) {
      csv += fmt_double(p.x * c.generate.scale);
      csv += ',';
      csv += fmt_double(p.y * c.generate.scale);
      csv += '\n';
    }
    const std::string path = outdir + "/pc" + std::to_string(pc) + "_offset" +
                             fmt_double(offsets[i]) + ".csv";
    write_text_file(path, csv);
  }
  out << "wrote " << offsets.size() << " trajectories to " << outdir << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& c, const std::string& ckpt_path,
              const std::string& basis_path, const std::string& ds_path,
              const std::string& out_path, int threads, std::ostream& out) {
  const auto [ck, b] = load_model_pair(ckpt_path, basis_path);
  const DatasetSplit ds = load_dataset(ds_path);
  const size_t n = std::min(size_t(c.sweep.limit), ds.val.size());
  require(n >= 2, ErrClass::BadInput,
          "sweep needs at least two validation scenarios");
  const std::vector<Scenario> subset(ds.val.begin(),
                                     ds.val.begin() + ptrdiff_t(n));
  const std::vector<SweepRow> rows =
      ode_sweep(ck.model, b, subset, c.sweep.grid, c.score, threads);
  ensure_parent(out_path);
  write_text_file(out_path, sweep_csv(rows));
  out << "wrote " << out_path << " (" << n << " scenarios, reference "
      << rows.back().steps << " steps)\n";
  return 0;
}

int cmd_repro(const RunConfig& c, int threads, std::ostream& out) {
  make_dirs(c.out);
  save_run_config(c, c.out + "/resolved.cfg");
  out << "[1/5] generate\n" << std::flush;
  cmd_generate(c, c.out + "/dataset.ds", out);
  out << "[2/5] fit-manifold\n" << std::flush;
  cmd_fit(c, c.out + "/dataset.ds", c.out + "/basis.pca", out);
  out << "[3/5] train\n" << std::flush;
  cmd_train(c, c.out + "/dataset.ds", c.out + "/basis.pca",
            c.out + "/model.ckpt", c.out + "/train_report.csv", "", threads,
            out);
  out << "[4/5] score\n" << std::flush;
  cmd_score(c, c.out + "/model.ckpt", c.out + "/basis.pca",
            c.out + "/dataset.ds", c.out + "/scores.csv", threads, out);
  out << "[5/5] eval\n" << std::flush;
  cmd_eval(c, c.out + "/scores.csv", c.out + "/dataset.ds",
           c.out + "/report.json", out);
  out << "repro complete in " << c.out << "\n";
  return 0;
}

int cmd_validate(const std::vector<std::string>& paths, std::ostream& out) {
  std::optional<uint64_t> basis_seen;
  std::optional<uint64_t> ckpt_wants;
  for (const std::string& path : paths) {
    const std::string text = read_text_file(path);
    const size_t eol = text.find('\n');
    const std::string head =
        eol == std::string::npos ? text : text.substr(0, eol);
    if (head == kDatasetFormat) {
      const DatasetSplit ds = load_dataset(path);
      out << "ok " << path << " dataset (train " << ds.train.size() << ", val "
          << ds.val.size() << ", seed " << ds.seed << ")\n";
    } else if (head == "specflow-pca-v1") {
      const SpectralBasis b = load_basis(path);
      basis_seen = basis_hash(b);
      out << "ok " << path << " basis (k " << b.k << ", D " << b.D << ", hash "
          << hex64(*basis_seen) << ")\n";
    } else if (head == "specflow-ckpt-v1") {
      const Checkpoint ck = load_checkpoint(path);
      ckpt_wants = ck.basis_hash;
      out << "ok " << path << " checkpoint (params " << ck.model.p.count()
          << ", basis hash " << hex64(*ckpt_wants) << ")\n";
    } else if (head == std::string(kCfgFormat)) {
      const RunConfig c = load_run_config(path);
      out << "ok " << path << " config (seed " << c.seed << ", out " << c.out
          << ")\n";
    } else if (head == "specflow-report-v1") {
      const ojson j = parse_json(text.substr(eol + 1), path);
      require(j.contains("format_version") &&
                  j.at("format_version") == "specflow-report-v1",
              ErrClass::VersionMismatch,
              "report body version disagrees with its version line");
      out << "ok " << path << " report (auc "
          << fmt_double(j.at("auc_roc").get<double>()) << ")\n";
    } else {
      fail(ErrClass::VersionMismatch,
           path + " starts with an unrecognized format line");
    }
  }
  if (basis_seen && ckpt_wants) {
    require(*basis_seen == *ckpt_wants, ErrClass::BasisMismatch,
            "checkpoint basis hash does not match the basis file");
    out << "ok basis/checkpoint linkage\n";
  }
  return 0;
}

// `--offsets -2,-1,0,1,2` would read as a flag cluster; fold the value into
// the option token before the parser sees it.
std::vector<std::string> fold_offset_values(std::vector<std::string> args) {
  for (size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--offsets" && !args[i + 1].empty() &&
        args[i + 1][0] == '-') {
      args[i] += "=" + args[i + 1];
      args.erase(args.begin() + ptrdiff_t(i) + 1);
    }
  }
  return args;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out,
            std::ostream& err) {
  try {
    CLI::App app{"flow-matching trajectory density pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    int threads = 0;
    std::string in_dataset, in_basis, in_ckpt, in_scores;
    std::string out_path;
    uint64_t seed_flag = 0;
    int k_flag = 0;
    int pc_flag = 0;
    std::string offsets_flag, grid_flag, trace_flag, probe_dist_flag;
    int steps_flag = 0, probes_flag = 0, bins_flag = 0, limit_flag = 0;
    uint64_t probe_seed_flag = 0;
    std::string report_path, weights_path;
    std::vector<std::string> validate_paths;

    auto add_common = [&](CLI::App* sub, bool with_threads) {
      sub->add_option("--config", config_path, "pipeline config file");
      if (with_threads)
        sub->add_option("--threads", threads,
                        "worker threads (SPECFLOW_THREADS as fallback)");
    };

    CLI::App* g = app.add_subcommand("generate", "sample a synthetic dataset");
    add_common(g, false);
    g->add_option("--out", out_path, "dataset file to write");
    CLI::Option* g_seed = g->add_option("--seed", seed_flag, "dataset seed");

    CLI::App* f =
        app.add_subcommand("fit-manifold", "fit the trajectory basis");
    add_common(f, false);
    f->add_option("--dataset", in_dataset, "dataset file");
    CLI::Option* f_k = f->add_option("--k", k_flag, "number of components");
    f->add_option("--out", out_path, "basis file to write");

    CLI::App* t = app.add_subcommand("train", "train the flow field");
    add_common(t, true);
    t->add_option("--dataset", in_dataset, "dataset file");
    t->add_option("--basis", in_basis, "basis file");
    t->add_option("--out", out_path, "checkpoint file to write");
    t->add_option("--report", report_path, "per-epoch stats csv");
    t->add_option("--emit-weights", weights_path, "complexity weights csv");

    CLI::App* s = app.add_subcommand("score", "log-likelihood scoring");
    add_common(s, true);
    s->add_option("--ckpt", in_ckpt, "checkpoint file");
    s->add_option("--basis", in_basis, "basis file");
    s->add_option("--dataset", in_dataset, "dataset file (scores val split)");
    s->add_option("--out", out_path, "scores csv to write");
    CLI::Option* s_steps = s->add_option("--steps", steps_flag, "RK4 steps");
    CLI::Option* s_trace =
        s->add_option("--trace", trace_flag, "exact or hutchinson");
    CLI::Option* s_probes =
        s->add_option("--probes", probes_flag, "hutchinson probes");
    CLI::Option* s_pdist = s->add_option("--probe-dist", probe_dist_flag,
                                         "rademacher or gaussian");
    CLI::Option* s_pseed =
        s->add_option("--probe-seed", probe_seed_flag, "probe seed");

    CLI::App* e = app.add_subcommand("eval", "golden labels, AUC, gap table");
    add_common(e, false);
    e->add_option("--scores", in_scores, "scores csv");
    e->add_option("--dataset", in_dataset, "dataset file (for labels)");
    e->add_option("--out", out_path, "report json to write");
    CLI::Option* e_bins = e->add_option("--bins", bins_flag, "histogram bins");

    CLI::App* tv = app.add_subcommand("traverse", "dump basis sweeps");
    add_common(tv, false);
    tv->add_option("--basis", in_basis, "basis file");
    CLI::Option* tv_pc =
        tv->add_option("--pc", pc_flag, "principal component, 1-based");
    CLI::Option* tv_off =
        tv->add_option("--offsets", offsets_flag, "comma-separated offsets");
    tv->add_option("--out", out_path, "output directory");

    CLI::App* sw = app.add_subcommand("sweep-ode", "step-count convergence");
    add_common(sw, true);
    sw->add_option("--ckpt", in_ckpt, "checkpoint file");
    sw->add_option("--basis", in_basis, "basis file");
    sw->add_option("--dataset", in_dataset, "dataset file");
    CLI::Option* sw_grid =
        sw->add_option("--grid", grid_flag, "comma-separated step counts");
    CLI::Option* sw_limit =
        sw->add_option("--limit", limit_flag, "scenarios to use");
    sw->add_option("--out", out_path, "sweep csv to write");

    CLI::App* r = app.add_subcommand("repro", "full pipeline from one config");
    r->add_option("--config", config_path, "pipeline config file")->required();
    r->add_option("--threads", threads,
                  "worker threads (SPECFLOW_THREADS as fallback)");
    CLI::Option* r_out = r->add_option("--out", out_path, "output directory");

    CLI::App* v = app.add_subcommand("validate", "check artifact files");
    v->add_option("files", validate_paths, "artifact files to check")
        ->required()
        ->expected(-1);

    const std::vector<std::string> args = fold_offset_values(raw_args);
    std::vector<const char*> argv;
    argv.push_back("specflow");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
      app.parse(int(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& ex) {
      err << "error: USAGE: " << ex.what() << "\n";
      return 1;
    }

    RunConfig c;
    if (!config_path.empty()) c = load_run_config(config_path);

    if (app.got_subcommand(g)) {
      if (g_seed->count()) c.seed = seed_flag;
      echo_config(out, c);
      const std::string p =
          out_path.empty() ? c.out + "/dataset.ds" : out_path;
      return cmd_generate(c, p, out);
    }
    if (app.got_subcommand(f)) {
      if (f_k->count()) {
        c.fit.k = k_flag;
        c.model.k = k_flag;  // keep the pair consistent for validation
        c.validate();
      }
      echo_config(out, c);
      const std::string in =
          in_dataset.empty() ? c.out + "/dataset.ds" : in_dataset;
      const std::string p = out_path.empty() ? c.out + "/basis.pca" : out_path;
      return cmd_fit(c, in, p, out);
    }
    if (app.got_subcommand(t)) {
      echo_config(out, c);
      const std::string in =
          in_dataset.empty() ? c.out + "/dataset.ds" : in_dataset;
      const std::string bp = in_basis.empty() ? c.out + "/basis.pca" : in_basis;
      const std::string p = out_path.empty() ? c.out + "/model.ckpt" : out_path;
      const std::string rp =
          report_path.empty() ? sibling(p, "train_report.csv") : report_path;
      return cmd_train(c, in, bp, p, rp, weights_path, threads, out);
    }
    if (app.got_subcommand(s)) {
      if (s_steps->count()) c.score.steps = steps_flag;
      if (s_trace->count()) c.score.trace = trace_flag;
      if (s_probes->count()) c.score.probes = probes_flag;
      if (s_pdist->count()) c.score.probe_dist = probe_dist_flag;
      if (s_pseed->count()) c.score.probe_seed = probe_seed_flag;
      c.score.validate();
      echo_config(out, c);
      const std::string cp = in_ckpt.empty() ? c.out + "/model.ckpt" : in_ckpt;
      const std::string bp = in_basis.empty() ? c.out + "/basis.pca" : in_basis;
      const std::string in =
          in_dataset.empty() ? c.out + "/dataset.ds" : in_dataset;
      const std::string p = out_path.empty() ? c.out + "/scores.csv" : out_path;
      return cmd_score(c, cp, bp, in, p, threads, out);
    }
    if (app.got_subcommand(e)) {
      if (e_bins->count()) {
        c.eval.bins = bins_flag;
        require(c.eval.bins >= 1, ErrClass::Usage, "--bins must be positive");
      }
      echo_config(out, c);
      const std::string sp =
          in_scores.empty() ? c.out + "/scores.csv" : in_scores;
      const std::string in =
          in_dataset.empty() ? c.out + "/dataset.ds" : in_dataset;
      const std::string p =
          out_path.empty() ? c.out + "/report.json" : out_path;
      return cmd_eval(c, sp, in, p, out);
    }
    if (app.got_subcommand(tv)) {
      if (tv_pc->count()) c.traverse.pc = pc_flag;
      if (tv_off->count())
        c.traverse.offsets = parse_double_list(offsets_flag, "--offsets");
      echo_config(out, c);
      const std::string bp = in_basis.empty() ? c.out + "/basis.pca" : in_basis;
      const std::string p = out_path.empty() ? c.out + "/traverse" : out_path;
      return cmd_traverse(c, bp, c.traverse.pc, c.traverse.offsets, p, out);
    }
    if (app.got_subcommand(sw)) {
      if (sw_grid->count()) c.sweep.grid = parse_int_list(grid_flag, "--grid");
      if (sw_limit->count()) c.sweep.limit = limit_flag;
      for (size_t i = 0; i < c.sweep.grid.size(); ++i) {
        require(c.sweep.grid[i] >= 1, ErrClass::Usage,
                "--grid entries must be positive");
        require(i == 0 || c.sweep.grid[i] > c.sweep.grid[i - 1],
                ErrClass::Usage, "--grid must be strictly increasing");
      }
      require(c.sweep.limit >= 2, ErrClass::Usage,
              "--limit needs at least two scenarios");
      echo_config(out, c);
      const std::string cp = in_ckpt.empty() ? c.out + "/model.ckpt" : in_ckpt;
      const std::string bp = in_basis.empty() ? c.out + "/basis.pca" : in_basis;
      const std::string in =
          in_dataset.empty() ? c.out + "/dataset.ds" : in_dataset;
      const std::string p = out_path.empty() ? c.out + "/sweep.csv" : out_path;
      return cmd_sweep(c, cp, bp, in, p, threads, out);
    }
    if (app.got_subcommand(r)) {
      if (r_out->count()) c.out = out_path;
      echo_config(out, c);
      return cmd_repro(c, threads, out);
    }
    if (app.got_subcommand(v)) return cmd_validate(validate_paths, out);

    fail(ErrClass::Usage, "no subcommand given");
  } catch (const SpecError& ex) {
    err << "error: " << err_class_name(ex.cls()) << ": " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    err << "error: INTERNAL: " << ex.what() << "\n";
    return 1;
  }
}

}  // namespace specflow
