// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
//
// Single binary wiring every stage: mesh queries, synthetic data, training,
// sampling, probe evaluation, and PNG rendering. Exit codes: 0 success,
// 1 usage error, 2 data/config error, 3 numeric failure.
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "icodiff/cli/run_dir.hpp"
#include "icodiff/cli/toml.hpp"
#include "icodiff/cli/train_config_io.hpp"
#include "icodiff/dataio/manifest.hpp"
#include "icodiff/dataio/png.hpp"
#include "icodiff/dataio/smf.hpp"
#include "icodiff/dataio/synth.hpp"
#include "icodiff/errors.hpp"
#include "icodiff/eval/probe.hpp"
#include "icodiff/geom/icosphere.hpp"
#include "icodiff/geom/patch_table.hpp"
#include "icodiff/sampler/sampler.hpp"
#include "icodiff/train/checkpoint.hpp"
#include "icodiff/train/trainer.hpp"

extern "C" void openblas_set_num_threads(int num_threads);

namespace {

using namespace icodiff;
namespace fs = std::filesystem;

struct Globals {
  std::optional<std::int64_t> seed;
  int threads = 0;  // 0 -> hardware concurrency
  bool verbose = false;
};

std::uint64_t resolve_seed(const std::optional<std::int64_t>& local,
                           const Globals& g) {
  if (local) return std::uint64_t(*local);
  if (g.seed) return std::uint64_t(*g.seed);
  return 0;
}

void add_common_keys(TomlTable& t, const std::string& subcommand,
                     const Globals& g) {
  t["subcommand"] = TomlValue::of(subcommand);
  t["threads"] = TomlValue::of(std::int64_t(g.threads));
  t["verbose"] = TomlValue::of(g.verbose);
}

void vprint(const Globals& g, const std::string& line) {
  if (g.verbose) std::fprintf(stderr, "%s\n", line.c_str());
}

// ---------------------------------------------------------------- icosphere

struct IcosphereArgs {
  int level = 0;
  bool stats = false;
  std::string out_obj;
};

int run_icosphere(const IcosphereArgs& a, const Globals&) {
  const IcoMesh mesh = build_icosphere(a.level);
  const std::int64_t v = std::int64_t(mesh.vertices.size());
  const std::int64_t f = std::int64_t(mesh.faces.size());
  const std::int64_t e = std::int64_t(mesh.edges.size());
  if (a.stats || a.out_obj.empty())
    std::printf("vertices=%" PRId64 " faces=%" PRId64 " edges=%" PRId64
                " euler=%" PRId64 "\n",
                v, f, e, v - e + f);
  if (!a.out_obj.empty()) {
    std::string obj;
    char buf[160];
    for (const auto& p : mesh.vertices) {
      std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p[0], p[1], p[2]);
      obj += buf;
    }
    for (const auto& t : mesh.faces) {
      std::snprintf(buf, sizeof buf, "f %d %d %d\n", t[0] + 1, t[1] + 1,
                    t[2] + 1);
      obj += buf;
    }
    write_text_file(a.out_obj, obj);
  }
  return 0;
}

// ----------------------------------------------------------------- gen-data

struct GenDataArgs {
  int n = 0;
  int level = 0;
  std::optional<std::int64_t> seed;
  double age_min = 24.0;
  double age_max = 45.0;
  std::string out;
  bool force = false;
};

int run_gen_data(const GenDataArgs& a, const Globals& g) {
  prepare_run_dir(a.out, a.force);
  RunLock lock(a.out);
  SynthOptions opt;
  opt.n = a.n;
  opt.level = a.level;
  opt.seed = resolve_seed(a.seed, g);
  opt.age_min = a.age_min;
  opt.age_max = a.age_max;
  synth_dataset(opt, a.out);
  TomlTable resolved;
  add_common_keys(resolved, "gen-data", g);
  resolved["n"] = TomlValue::of(std::int64_t(a.n));
  resolved["level"] = TomlValue::of(std::int64_t(a.level));
  resolved["seed"] = TomlValue::of(std::int64_t(opt.seed));
  resolved["age_min"] = TomlValue::of(a.age_min);
  resolved["age_max"] = TomlValue::of(a.age_max);
  resolved["out_dir"] = TomlValue::of(a.out);
  write_text_file(a.out + "/resolved.toml", emit_toml(resolved));
  vprint(g, "wrote " + std::to_string(a.n) + " samples to " + a.out);
  return 0;
}

// -------------------------------------------------------------------- train

struct TrainArgs {
  std::string config_path;
  std::string resume_path;
  bool force = false;
  std::optional<std::int64_t> seed;
  // flag overrides; unset means "keep config/default"
  std::optional<double> lr, weight_decay, ema_decay, p_uncond, lambda_vlb;
  std::optional<double> beta_min, beta_max, age_min, age_max;
  std::optional<std::int64_t> batch_size, steps, t_steps, low_level;
  std::optional<std::int64_t> checkpoint_every, metrics_every;
  std::optional<std::int64_t> layers, heads, hidden, mlp;
  std::optional<std::string> mode, manifest, out;
};

TrainConfig resolve_train_config(const TrainArgs& a, const Globals& g) {
  TrainConfig cfg;
  bool seed_in_file = false;
  if (!a.config_path.empty()) {
    const TomlTable file = parse_toml_file(a.config_path);
    seed_in_file = file.count("seed") > 0;
    cfg = train_config_from_toml(file, cfg);
  }
  if (a.lr) cfg.lr = *a.lr;
  if (a.weight_decay) cfg.weight_decay = *a.weight_decay;
  if (a.batch_size) cfg.batch_size = int(*a.batch_size);
  if (a.steps) cfg.steps = *a.steps;
  if (a.ema_decay) cfg.ema_decay = *a.ema_decay;
  if (a.p_uncond) cfg.p_uncond = *a.p_uncond;
  if (a.lambda_vlb) cfg.lambda_vlb = *a.lambda_vlb;
  if (a.t_steps) cfg.t_steps = int(*a.t_steps);
  if (a.beta_min) cfg.beta_min = *a.beta_min;
  if (a.beta_max) cfg.beta_max = *a.beta_max;
  if (a.low_level) cfg.low_level = int(*a.low_level);
  if (a.checkpoint_every) cfg.checkpoint_every = int(*a.checkpoint_every);
  if (a.metrics_every) cfg.metrics_every = int(*a.metrics_every);
  if (a.layers) cfg.model.layers = int(*a.layers);
  if (a.heads) cfg.model.heads = int(*a.heads);
  if (a.hidden) cfg.model.hidden = int(*a.hidden);
  if (a.mlp) cfg.model.mlp = int(*a.mlp);
  if (a.mode) cfg.model.mode = conditioning_mode_from_string(*a.mode);
  if (a.age_min) cfg.model.age_min = *a.age_min;
  if (a.age_max) cfg.model.age_max = *a.age_max;
  if (a.manifest) cfg.manifest_path = *a.manifest;
  if (a.out) cfg.out_dir = *a.out;
  if (a.seed) cfg.seed = std::uint64_t(*a.seed);
  else if (!seed_in_file && g.seed) cfg.seed = std::uint64_t(*g.seed);
  return cfg;
}

int run_train(const TrainArgs& a, const Globals& g) {
  const TrainConfig cfg = resolve_train_config(a, g);
  if (cfg.out_dir.empty())
    throw ArgumentError("train: no output directory (set --out or out_dir)");
  const bool resuming = !a.resume_path.empty();
  // A resumed run reuses its directory; a fresh one demands a fresh one.
  if (resuming) fs::create_directories(cfg.out_dir);
  else prepare_run_dir(cfg.out_dir, a.force);
  RunLock lock(cfg.out_dir);
  write_text_file(cfg.out_dir + "/resolved.toml",
                  emit_toml(train_config_to_toml(cfg)));

  const auto progress = [&](std::int64_t step, std::int64_t total) {
    if (g.verbose && (step % std::max<std::int64_t>(total / 10, 1) == 0 ||
                      step == total))
      std::fprintf(stderr, "step %" PRId64 "/%" PRId64 "\n", step, total);
  };
  TrainResult res = resuming
                        ? train(cfg, load_checkpoint(a.resume_path), progress)
                        : train(cfg, progress);
  std::printf("trained to step %" PRId64 "; checkpoint %s\n", res.state.step,
              res.checkpoint_path.c_str());
  return 0;
}

// ------------------------------------------------------------------- sample

struct SampleArgs {
  std::string checkpoint;
  std::string out;
  std::optional<double> age;
  int count = 1;
  double guidance = 2.0;
  std::optional<std::int64_t> seed;
  bool force = false;
};

int run_sample(const SampleArgs& a, const Globals& g) {
  prepare_run_dir(a.out, a.force);
  RunLock lock(a.out);
  const TrainState st = load_checkpoint(a.checkpoint);
  const auto [high, low] =
      level_pair_for_patches(st.config.patch_count, st.config.patch_len);
  const PatchTable table = load_or_build_patch_table(high, low, a.out);

  SampleRequest req;
  req.count = a.count;
  req.age_weeks = a.age;
  req.guidance = a.guidance;
  req.seed = resolve_seed(a.seed, g);
  req.level = high;
  const auto progress = [&](int t, int total) {
    if (g.verbose && (t % std::max(total / 10, 1) == 0 || t == 1))
      std::fprintf(stderr, "denoise step %d/%d\n", total - t + 1, total);
  };
  // The EMA shadow is the published model; raw params stay training-only.
  const SampleOutput out = sample(st.ema, st.config, st.schedule, table, req,
                                  st.norm_mean, st.norm_std, progress);
  for (std::size_t i = 0; i < out.maps.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "sample_%04zu.smf", i);
    write_smf(out.maps[i], a.out + "/" + name);
  }
  TomlTable resolved;
  add_common_keys(resolved, "sample", g);
  resolved["checkpoint"] = TomlValue::of(a.checkpoint);
  resolved["count"] = TomlValue::of(std::int64_t(a.count));
  if (a.age) resolved["age"] = TomlValue::of(*a.age);
  resolved["guidance"] = TomlValue::of(a.guidance);
  resolved["seed"] = TomlValue::of(std::int64_t(req.seed));
  resolved["out_dir"] = TomlValue::of(a.out);
  write_text_file(a.out + "/resolved.toml", emit_toml(resolved));
  std::printf("wrote %zu samples to %s\n", out.maps.size(), a.out.c_str());
  return 0;
}

// --------------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string probe_manifest;
  std::string ages = "27:44";
  int per_age = 20;
  double guidance = 2.0;
  double lambda = 1.0;
  std::optional<std::int64_t> seed;
  std::string out;
  std::string report;  // default <out>/report.json
  bool force = false;
};

std::pair<int, int> parse_age_range(const std::string& s) {
  const std::size_t colon = s.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == s.size())
    throw ArgumentError("--ages must be lo:hi, got '" + s + "'");
  try {
    const int lo = std::stoi(s.substr(0, colon));
    const int hi = std::stoi(s.substr(colon + 1));
    if (lo > hi) throw ArgumentError("--ages lo exceeds hi in '" + s + "'");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw ArgumentError("--ages must be integer lo:hi, got '" + s + "'");
  }
}

void read_split(const DatasetManifest& man, const std::string& dir,
                const std::string& split, std::vector<MetricMap>& maps,
                std::vector<double>& ages) {
  for (const ManifestEntry* e : split_entries(man, split)) {
    maps.push_back(read_smf(dir + "/" + e->path));
    ages.push_back(e->age_weeks);
  }
}

int run_eval(const EvalArgs& a, const Globals& g) {
  const auto [age_lo, age_hi] = parse_age_range(a.ages);
  prepare_run_dir(a.out, a.force);
  RunLock lock(a.out);
  const std::string report_path =
      a.report.empty() ? a.out + "/report.json" : a.report;
  const std::uint64_t base_seed = resolve_seed(a.seed, g);

  const TrainState st = load_checkpoint(a.checkpoint);
  const auto [high, low] =
      level_pair_for_patches(st.config.patch_count, st.config.patch_len);
  const PatchTable table = load_or_build_patch_table(high, low, a.out);

  const DatasetManifest man = load_manifest(a.probe_manifest);
  if (man.level != high)
    throw ArgumentError("probe manifest level " + std::to_string(man.level) +
                        " does not match checkpoint level " +
                        std::to_string(high));
  const std::string man_dir = fs::path(a.probe_manifest).parent_path().string();
  std::vector<MetricMap> train_maps, test_maps;
  std::vector<double> train_ages, test_ages;
  read_split(man, man_dir, "train", train_maps, train_ages);
  read_split(man, man_dir, "test", test_maps, test_ages);
  vprint(g, "probe: " + std::to_string(train_maps.size()) + " train, " +
                std::to_string(test_maps.size()) + " held-out");

  const ProbeModel probe = fit_ridge(
      feature_matrix(train_maps, table, &probe_features), train_ages, a.lambda);
  const EvalStats real_stats = evaluate(
      predict(probe, feature_matrix(test_maps, table, &probe_features)),
      test_ages);

  std::vector<MetricMap> gen_maps;
  std::vector<double> gen_ages;
  for (int age = age_lo; age <= age_hi; ++age) {
    SampleRequest req;
    req.count = a.per_age;
    req.age_weeks = double(age);
    req.guidance = a.guidance;
    req.seed = base_seed + std::uint64_t(age - age_lo) + 1;
    req.level = high;
    SampleOutput out =
        sample(st.ema, st.config, st.schedule, table, req, st.norm_mean,
               st.norm_std);
    for (auto& m : out.maps) {
      gen_maps.push_back(std::move(m));
      gen_ages.push_back(double(age));
    }
    vprint(g, "generated age " + std::to_string(age));
  }
  const EvalStats gen_stats = evaluate(
      predict(probe, feature_matrix(gen_maps, table, &probe_features)),
      gen_ages);

  nlohmann::json report = {
      {"mae_real", real_stats.mae},   {"mae_real_sd", real_stats.mae_sd},
      {"r2_real", real_stats.r2},     {"mae_synth", gen_stats.mae},
      {"mae_synth_sd", gen_stats.mae_sd}, {"r2_synth", gen_stats.r2},
      {"ratio", gen_stats.mae / real_stats.mae}};
  write_text_file(report_path, report.dump(2) + "\n");

  TomlTable resolved;
  add_common_keys(resolved, "eval", g);
  resolved["checkpoint"] = TomlValue::of(a.checkpoint);
  resolved["probe_manifest"] = TomlValue::of(a.probe_manifest);
  resolved["ages"] = TomlValue::of(a.ages);
  resolved["per_age"] = TomlValue::of(std::int64_t(a.per_age));
  resolved["guidance"] = TomlValue::of(a.guidance);
  resolved["lambda"] = TomlValue::of(a.lambda);
  resolved["seed"] = TomlValue::of(std::int64_t(base_seed));
  resolved["out_dir"] = TomlValue::of(a.out);
  resolved["report"] = TomlValue::of(report_path);
  write_text_file(a.out + "/resolved.toml", emit_toml(resolved));

  std::printf(
      "real MAE %.3f (R2 %.3f) | generated MAE %.3f (R2 %.3f) | ratio %.3f\n",
      real_stats.mae, real_stats.r2, gen_stats.mae, gen_stats.r2,
      gen_stats.mae / real_stats.mae);
  return 0;
}

// ---------------------------------------------------------------------- viz

struct VizArgs {
  std::string in;
  std::string out;
  int width = 512;
  int height = 256;
  bool force = false;
};

int run_viz(const VizArgs& a, const Globals& g) {
  prepare_run_dir(a.out, a.force);
  RunLock lock(a.out);
  const MetricMap map = read_smf(a.in);
  const IcoMesh mesh = build_icosphere(map.level);
  const std::string stem = fs::path(a.in).stem().string();
  const std::string png_path = a.out + "/" + stem + ".png";
  project_png(map, mesh, a.width, a.height, png_path);
  TomlTable resolved;
  add_common_keys(resolved, "viz", g);
  resolved["in"] = TomlValue::of(a.in);
  resolved["out_dir"] = TomlValue::of(a.out);
  resolved["width"] = TomlValue::of(std::int64_t(a.width));
  resolved["height"] = TomlValue::of(std::int64_t(a.height));
  write_text_file(a.out + "/resolved.toml", emit_toml(resolved));
  vprint(g, "wrote " + png_path);
  std::printf("%s\n", png_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "icodiff: conditional denoising diffusion over icosahedral surface "
      "metric maps"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed,
                 "Default RNG seed for subcommands that take one");
  app.add_option("--threads", g.threads,
                 "BLAS thread count (0 = hardware concurrency)");
  app.add_flag("--verbose", g.verbose, "Progress chatter on stderr");

  IcosphereArgs ico;
  CLI::App* c_ico = app.add_subcommand("icosphere", "Mesh statistics / OBJ export");
  c_ico->add_option("--level", ico.level, "Subdivision level")
      ->required()
      ->check(CLI::Range(0, kMaxIcosphereLevel));
  c_ico->add_flag("--stats", ico.stats, "Print vertex/face/edge/Euler counts");
  c_ico->add_option("--out", ico.out_obj, "Write the mesh as a Wavefront OBJ");

  GenDataArgs gen;
  CLI::App* c_gen = app.add_subcommand("gen-data", "Synthesize an age-conditioned dataset");
  c_gen->add_option("--n", gen.n, "Sample count")->required()->check(CLI::PositiveNumber);
  c_gen->add_option("--level", gen.level, "Icosphere level")
      ->required()
      ->check(CLI::Range(0, kMaxIcosphereLevel));
  c_gen->add_option("--seed", gen.seed, "Dataset seed");
  c_gen->add_option("--age-min", gen.age_min, "Age range low (weeks)");
  c_gen->add_option("--age-max", gen.age_max, "Age range high (weeks)");
  c_gen->add_option("--out", gen.out, "Output directory")->required();
  c_gen->add_flag("--force", gen.force, "Reuse a non-empty output directory");

  TrainArgs tr;
  CLI::App* c_tr = app.add_subcommand("train", "Train the diffusion model");
  c_tr->add_option("--config", tr.config_path, "TOML config file");
  c_tr->add_option("--resume", tr.resume_path, "Checkpoint to resume from");
  c_tr->add_option("--seed", tr.seed, "Training seed");
  c_tr->add_option("--lr", tr.lr, "Learning rate");
  c_tr->add_option("--weight-decay", tr.weight_decay, "AdamW weight decay");
  c_tr->add_option("--batch-size", tr.batch_size, "Batch size");
  c_tr->add_option("--steps", tr.steps, "Total optimizer steps");
  c_tr->add_option("--ema-decay", tr.ema_decay, "EMA decay in [0,1)");
  c_tr->add_option("--p-uncond", tr.p_uncond, "Condition dropout probability");
  c_tr->add_option("--lambda-vlb", tr.lambda_vlb, "Variational term weight");
  c_tr->add_option("--t-steps", tr.t_steps, "Diffusion steps T");
  c_tr->add_option("--beta-min", tr.beta_min, "Schedule beta at t=1");
  c_tr->add_option("--beta-max", tr.beta_max, "Schedule beta at t=T");
  c_tr->add_option("--low-level", tr.low_level, "Patch (low) icosphere level");
  c_tr->add_option("--checkpoint-every", tr.checkpoint_every, "Checkpoint cadence");
  c_tr->add_option("--metrics-every", tr.metrics_every, "Metrics cadence");
  c_tr->add_option("--layers", tr.layers, "Transformer depth");
  c_tr->add_option("--heads", tr.heads, "Attention heads");
  c_tr->add_option("--hidden", tr.hidden, "Hidden width D");
  c_tr->add_option("--mlp", tr.mlp, "FFN width");
  c_tr->add_option("--mode", tr.mode, "Conditioning: token-append | adaln-zero");
  c_tr->add_option("--age-min", tr.age_min, "Model age range low");
  c_tr->add_option("--age-max", tr.age_max, "Model age range high");
  c_tr->add_option("--manifest", tr.manifest, "Dataset manifest path");
  c_tr->add_option("--out", tr.out, "Output directory");
  c_tr->add_flag("--force", tr.force, "Reuse a non-empty output directory");

  SampleArgs sa;
  CLI::App* c_sa = app.add_subcommand("sample", "Draw samples from a checkpoint (EMA weights)");
  c_sa->add_option("--checkpoint", sa.checkpoint, "Trained checkpoint")->required();
  c_sa->add_option("--age", sa.age, "Condition age in weeks (omit for unconditional)");
  c_sa->add_option("--count", sa.count, "Number of samples")->check(CLI::PositiveNumber);
  c_sa->add_option("--guidance", sa.guidance, "Classifier-free guidance weight w");
  c_sa->add_option("--seed", sa.seed, "Sampling seed");
  c_sa->add_option("--out", sa.out, "Output directory")->required();
  c_sa->add_flag("--force", sa.force, "Reuse a non-empty output directory");

  EvalArgs ev;
  CLI::App* c_ev = app.add_subcommand("eval", "Probe-score generated vs held-out real maps");
  c_ev->add_option("--checkpoint", ev.checkpoint, "Trained checkpoint")->required();
  c_ev->add_option("--probe-manifest", ev.probe_manifest, "Dataset manifest for the probe")
      ->required();
  c_ev->add_option("--ages", ev.ages, "Integer age grid lo:hi");
  c_ev->add_option("--per-age", ev.per_age, "Samples per age")->check(CLI::PositiveNumber);
  c_ev->add_option("--guidance", ev.guidance, "Classifier-free guidance weight w");
  c_ev->add_option("--lambda", ev.lambda, "Probe ridge penalty");
  c_ev->add_option("--seed", ev.seed, "Sampling seed");
  c_ev->add_option("--out", ev.out, "Output directory")->required();
  c_ev->add_option("--report", ev.report, "Report path (default <out>/report.json)");
  c_ev->add_flag("--force", ev.force, "Reuse a non-empty output directory");

  VizArgs vz;
  CLI::App* c_vz = app.add_subcommand("viz", "Render a metric map to an equirectangular PNG");
  c_vz->add_option("--in", vz.in, "Input .smf map")->required();
  c_vz->add_option("--out", vz.out, "Output directory")->required();
  c_vz->add_option("--width", vz.width, "Image width");
  c_vz->add_option("--height", vz.height, "Image height");
  c_vz->add_flag("--force", vz.force, "Reuse a non-empty output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }

  if (g.threads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    g.threads = hw > 0 ? int(hw) : 1;
  }
  openblas_set_num_threads(g.threads);

  try {
    if (c_ico->parsed()) return run_icosphere(ico, g);
    if (c_gen->parsed()) return run_gen_data(gen, g);
    if (c_tr->parsed()) return run_train(tr, g);
    if (c_sa->parsed()) return run_sample(sa, g);
    if (c_ev->parsed()) return run_eval(ev, g);
    if (c_vz->parsed()) return run_viz(vz, g);
    std::fprintf(stderr, "no subcommand\n");
    return 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
