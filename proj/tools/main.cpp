// beamsep: multi-channel source separation via estimator-guided MVDR
// beamforming. Subcommands: simulate, separate, stream, eval.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "beamsep/manifest.hpp"
#include "beamsep/metrics.hpp"
#include "beamsep/pipeline.hpp"
#include "beamsep/simulate.hpp"
#include "beamsep/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace beamsep;

namespace {

[[noreturn]] void fail(const std::string& kind, const std::string& message,
                       int code) {
  json j{{"error", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
  std::exit(code);
}

std::string image_name(const char* prefix, int s, int c, StageTag tag) {
  return std::string(prefix) + "_s" + std::to_string(s + 1) + "_c" +
         std::to_string(c + 1) + "_stage" + std::to_string(tag.stage) +
         "_iter" + std::to_string(tag.iteration) + ".wav";
}

// ---- scene.json -----------------------------------------------------------

SceneSpec load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open scene file");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(path + ": scene file is not valid JSON: " + e.what());
  }
  const fs::path base = fs::path(path).parent_path();

  SceneSpec spec;
  try {
    spec.sample_rate = j.value("sample_rate", 8000);
    spec.duration_s = j.value("duration_s", 4.0);
    spec.seed = j.value("seed", 0ull);
    if (j.contains("sir_db") && !j["sir_db"].is_null())
      spec.sir_db = j["sir_db"].get<double>();
    if (j.contains("sir_range"))
      spec.sir_range = {j["sir_range"][0].get<double>(),
                        j["sir_range"][1].get<double>()};
    if (j.contains("noise_snr_db") && !j["noise_snr_db"].is_null())
      spec.noise_snr_db = j["noise_snr_db"].get<double>();
    spec.geometry.speed_of_sound = j.value("speed_of_sound", 343.0);
    if (j.contains("mics"))
      for (const auto& m : j["mics"])
        spec.geometry.mics.push_back(
            {m[0].get<double>(), m[1].get<double>(), m[2].get<double>()});
    for (const auto& src : j.at("sources")) {
      SceneSourceSpec s;
      if (src.contains("position")) {
        const auto& p = src["position"];
        spec.geometry.sources.push_back(
            {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
      }
      const std::string kind = src.value("kind", "noise_burst");
      if (kind == "noise_burst")
        s.kind = DrySourceKind::noise_burst;
      else if (kind == "multitone")
        s.kind = DrySourceKind::multitone;
      else
        throw IoError(path + ": unknown source kind '" + kind + "'");
      if (src.contains("dry_file")) {
        const MultichannelWaveform dry =
            read_wav((base / src["dry_file"].get<std::string>()).string());
        if (dry.channels() != 1)
          throw IoError("dry source files must be mono");
        s.dry = dry.samples[0];
      }
      spec.sources.push_back(std::move(s));
    }
    if (j.contains("rir_files"))
      for (const auto& row : j["rir_files"]) {
        std::vector<std::vector<double>> per_source;
        for (const auto& p : row) {
          const MultichannelWaveform rir =
              read_wav((base / p.get<std::string>()).string());
          if (rir.channels() != 1) throw IoError("RIR files must be mono");
          per_source.push_back(rir.samples[0]);
        }
        spec.rirs.push_back(std::move(per_source));
      }
  } catch (const json::exception& e) {
    throw IoError(path + ": scene field error: " + e.what());
  }
  return spec;
}

// ---- shared helpers -------------------------------------------------------

StftConfig stft_from_ms(double frame_ms, double hop_ms, int sample_rate) {
  StftConfig cfg;
  cfg.frame_len =
      static_cast<int>(std::lround(frame_ms * sample_rate / 1000.0));
  cfg.hop = static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0));
  cfg.fft_size = cfg.frame_len;
  cfg.validate();
  return cfg;
}

json metrics_json(const MetricReport& rep) {
  json out;
  const int ref = rep.reference_channel - 1;
  json snr_arr = json::array(), sdr = json::array(), clamped = json::array(),
       perm = json::array();
  for (std::size_t s = 0; s < rep.by_source.size(); ++s) {
    snr_arr.push_back(rep.by_source[s][ref].snr_db);
    sdr.push_back(rep.by_source[s][ref].sdr_db);
    clamped.push_back(rep.by_source[s][ref].sdr_clamped);
    perm.push_back(rep.permutation[s] + 1);
  }
  out["snr_db"] = snr_arr;
  out["sdr_db"] = sdr;
  out["sdr_clamped"] = clamped;
  out["permutation"] = perm;
  out["mean_snr_db"] = rep.mean_snr_db;
  out["mean_sdr_db"] = rep.mean_sdr_db;
  return out;
}

json grid_to_json(const std::vector<std::vector<std::string>>& grid) {
  json out = json::array();
  for (const auto& row : grid) {
    json r = json::array();
    for (const auto& p : row) r.push_back(p);
    out.push_back(r);
  }
  return out;
}

// Writes one image set as mono WAVs into dir; returns the [s][c] file names.
std::vector<std::vector<std::string>> write_images(const fs::path& dir,
                                                   const char* prefix,
                                                   const SourceImageSet& set) {
  std::vector<std::vector<std::string>> names;
  for (int s = 0; s < set.sources(); ++s) {
    std::vector<std::string> row;
    for (int c = 0; c < set.channels(); ++c) {
      const std::string name = image_name(prefix, s, c, set.stage_tag);
      MultichannelWaveform mono =
          make_waveform(1, set.length(), set.images[s].sample_rate);
      mono.samples[0] = set.images[s].samples[c];
      write_wav((dir / name).string(), mono, WavFormat::float32);
      row.push_back(name);
    }
    names.push_back(std::move(row));
  }
  return names;
}

json permutations_json(const PermutationMap& map) {
  json out = json::array();
  for (const auto& perm : map.pi) {
    json row = json::array();
    for (int idx : perm) row.push_back(idx + 1);
    out.push_back(row);
  }
  return out;
}

json scm_json(const ScmSummary& scm) {
  return json{{"fallback_bins", scm.fallback_bins},
              {"mean_target_trace", scm.mean_target_trace},
              {"mean_interfer_trace", scm.mean_interfer_trace}};
}

// ---- simulate -------------------------------------------------------------

int cmd_simulate(const std::string& scene_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed) {
  SceneSpec spec = load_scene(scene_path);
  if (seed) spec.seed = *seed;
  const RenderedScene scene = render_scene(spec);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_wav((dir / "mixture.wav").string(), scene.mixture, WavFormat::float32);

  Manifest manifest;
  manifest.sample_rate = spec.sample_rate;
  manifest.channels = scene.mixture.channels();
  manifest.sources = scene.truth.sources();
  manifest.mixture_path = (dir / "mixture.wav").string();
  manifest.sir_db = scene.sir_db_used;
  manifest.seed = spec.seed;
  for (int s = 0; s < scene.truth.sources(); ++s) {
    std::vector<std::string> row;
    for (int c = 0; c < scene.truth.channels(); ++c) {
      const std::string name = "truth_s" + std::to_string(s + 1) + "c" +
                               std::to_string(c + 1) + ".wav";
      MultichannelWaveform mono = make_waveform(
          1, scene.truth.length(), scene.truth.images[s].sample_rate);
      mono.samples[0] = scene.truth.images[s].samples[c];
      write_wav((dir / name).string(), mono, WavFormat::float32);
      row.push_back((dir / name).string());
    }
    manifest.truth_paths.push_back(std::move(row));
  }
  manifest.save((dir / "manifest.json").string());
  std::cout << "wrote " << (dir / "manifest.json").string() << " (sir "
            << scene.sir_db_used << " dB, " << scene.mixture.length()
            << " samples)\n";
  return 0;
}

// ---- separate / stream ----------------------------------------------------

struct RunOptions {
  std::string manifest_path;
  std::string estimator = "oracle-signal";
  int iterations = 4;
  int ref_channel = 1;
  double frame_ms = 512.0;
  double hop_ms = 128.0;
  double loading = kDefaultLoading;
  std::string out_dir;
};

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "oracle-signal") return EstimatorKind::oracle_signal;
  if (name == "oracle-irm") return EstimatorKind::oracle_irm;
  if (name == "external") return EstimatorKind::external;
  if (name == "guided-passthrough") return EstimatorKind::guided_passthrough;
  throw ConfigError("unknown estimator '" + name + "'");
}

PipelineConfig build_config(const RunOptions& opt, const Manifest& manifest,
                            const MultichannelWaveform& mixture,
                            PipelineMode mode) {
  PipelineConfig cfg;
  cfg.stft = stft_from_ms(opt.frame_ms, opt.hop_ms, mixture.sample_rate);
  cfg.iterations = opt.iterations;
  cfg.loading = opt.loading;
  cfg.reference_channel = opt.ref_channel;
  cfg.mode = mode;

  const EstimatorKind kind = parse_estimator(opt.estimator);
  // guided-passthrough refines the stage-1 estimate with pure SCM/MVDR
  // cycles, so its first stage runs the ratio-mask oracle.
  cfg.estimator_stage1.kind = kind == EstimatorKind::guided_passthrough
                                  ? EstimatorKind::oracle_irm
                                  : kind;
  cfg.estimator_stage2.kind = kind;

  const bool needs_truth =
      cfg.estimator_stage1.kind == EstimatorKind::oracle_signal ||
      cfg.estimator_stage1.kind == EstimatorKind::oracle_irm ||
      cfg.estimator_stage2.kind == EstimatorKind::oracle_signal ||
      cfg.estimator_stage2.kind == EstimatorKind::oracle_irm;
  if (needs_truth) {
    if (!manifest.has_truth())
      throw ConfigError("estimator '" + opt.estimator +
                        "' needs ground-truth entries in the manifest");
    const SourceImageSet truth = manifest.load_truth();
    cfg.estimator_stage1.truth = truth;
    cfg.estimator_stage2.truth = truth;
  }
  if (kind == EstimatorKind::external) {
    const auto external = manifest.load_external();
    cfg.estimator_stage1.external = external;
    cfg.estimator_stage2.external = external;
  }
  return cfg;
}

int cmd_separate(const RunOptions& opt) {
  const Manifest manifest = Manifest::load(opt.manifest_path);
  const MultichannelWaveform mixture = manifest.load_mixture();
  const PipelineConfig cfg =
      build_config(opt, manifest, mixture, PipelineMode::batch);

  const auto [final_out, trace] = run_iterative(cfg, mixture);

  fs::create_directories(opt.out_dir);
  const fs::path dir(opt.out_dir);
  SourceImageSet truth;
  if (manifest.has_truth()) truth = manifest.load_truth();

  json jtrace;
  jtrace["schema_version"] = 1;
  jtrace["mode"] = "batch";
  jtrace["estimator"] = opt.estimator;
  jtrace["iterations"] = cfg.iterations;
  jtrace["reference_channel"] = cfg.reference_channel;
  jtrace["loading"] = cfg.loading;
  jtrace["sample_rate"] = mixture.sample_rate;
  jtrace["stft"] = {{"frame_len", cfg.stft.frame_len},
                    {"hop", cfg.stft.hop},
                    {"fft_size", cfg.stft.fft_size}};
  json entries = json::array();
  for (const auto& entry : trace) {
    json e;
    e["stage"] = entry.tag.stage;
    e["iteration"] = entry.tag.iteration;
    e["zhat_files"] =
        grid_to_json(write_images(dir, "zhat", entry.estimator_output));
    e["xhat_files"] =
        grid_to_json(write_images(dir, "xhat", entry.beamformed));
    e["permutations"] = permutations_json(entry.permutations);
    e["scm"] = scm_json(entry.scm);
    if (manifest.has_truth()) {
      e["metrics"] = {{"zhat", metrics_json(report(entry.estimator_output,
                                                   truth,
                                                   cfg.reference_channel))},
                      {"xhat", metrics_json(report(entry.beamformed, truth,
                                                   cfg.reference_channel))}};
    }
    entries.push_back(std::move(e));
  }
  jtrace["entries"] = std::move(entries);

  std::ofstream out(dir / "trace.json");
  if (!out) throw IoError((dir / "trace.json").string() + ": cannot write");
  out << jtrace.dump(2) << "\n";
  std::cout << "wrote " << (dir / "trace.json").string() << " ("
            << trace.size() << " stage entries)\n";
  return 0;
}

int cmd_stream(const RunOptions& opt, bool causal) {
  if (!causal) throw ConfigError("stream runs causally; pass --causal");
  const Manifest manifest = Manifest::load(opt.manifest_path);
  const MultichannelWaveform mixture = manifest.load_mixture();
  RunOptions stream_opt = opt;
  stream_opt.iterations = 0;  // the stream is the single-stage causal chain
  const PipelineConfig cfg =
      build_config(stream_opt, manifest, mixture, PipelineMode::causal);

  CausalSession session(cfg);
  session.push(mixture);
  session.finish();

  SourceImageSet out;
  out.provenance = Provenance::beamformed;
  out.stage_tag = {1, 0};
  for (const auto& sig : session.emitted()) {
    MultichannelWaveform w = make_waveform(1, sig.size(), mixture.sample_rate);
    w.samples[0] = sig;
    out.images.push_back(std::move(w));
  }

  fs::create_directories(opt.out_dir);
  const fs::path dir(opt.out_dir);
  std::vector<std::vector<std::string>> xhat_names;
  for (int s = 0; s < out.sources(); ++s) {
    const std::string name =
        image_name("xhat", s, cfg.reference_channel - 1, out.stage_tag);
    write_wav((dir / name).string(), out.images[s], WavFormat::float32);
    xhat_names.push_back({name});
  }

  json jtrace;
  jtrace["schema_version"] = 1;
  jtrace["mode"] = "causal";
  jtrace["estimator"] = opt.estimator;
  jtrace["iterations"] = 0;
  jtrace["reference_channel"] = cfg.reference_channel;
  jtrace["loading"] = cfg.loading;
  jtrace["sample_rate"] = mixture.sample_rate;
  jtrace["stft"] = {{"frame_len", cfg.stft.frame_len},
                    {"hop", cfg.stft.hop},
                    {"fft_size", cfg.stft.fft_size}};
  jtrace["frames_processed"] = session.frames_processed();
  jtrace["latency_samples"] = cfg.stft.head_pad();

  json e;
  e["stage"] = 1;
  e["iteration"] = 0;
  e["xhat_files"] = grid_to_json(xhat_names);
  if (!session.permutation_history().empty())
    e["permutations"] =
        permutations_json(session.permutation_history().back());
  if (manifest.has_truth()) {
    const SourceImageSet truth = manifest.load_truth();
    SourceImageSet truth_ref;
    truth_ref.provenance = Provenance::ground_truth;
    for (const auto& img : truth.images) {
      MultichannelWaveform mono =
          make_waveform(1, img.length(), img.sample_rate);
      mono.samples[0] = img.samples[cfg.reference_channel - 1];
      truth_ref.images.push_back(std::move(mono));
    }
    e["metrics"] = {{"xhat", metrics_json(report(out, truth_ref, 1))}};
  }
  jtrace["entries"] = json::array({e});

  std::ofstream fout(dir / "trace.json");
  if (!fout) throw IoError((dir / "trace.json").string() + ": cannot write");
  fout << jtrace.dump(2) << "\n";
  std::cout << "wrote " << (dir / "trace.json").string() << " ("
            << session.frames_processed() << " frames)\n";
  return 0;
}

// ---- eval -----------------------------------------------------------------

SourceImageSet load_grid_rel(const fs::path& base,
                             const std::vector<std::vector<std::string>>& grid,
                             int sample_rate) {
  SourceImageSet set;
  for (const auto& row : grid) {
    MultichannelWaveform image;
    image.sample_rate = sample_rate;
    for (const auto& name : row) {
      MultichannelWaveform mono = read_wav((base / name).string());
      if (mono.channels() != 1)
        throw IoError((base / name).string() + ": expected a mono file");
      image.samples.push_back(std::move(mono.samples[0]));
    }
    set.images.push_back(std::move(image));
  }
  set.validate();
  return set;
}

int cmd_eval(const std::string& manifest_path,
             const std::string& estimates_dir, int taps) {
  const Manifest manifest = Manifest::load(manifest_path);
  if (!manifest.has_truth())
    throw ConfigError("eval needs ground-truth entries in the manifest");
  const SourceImageSet truth = manifest.load_truth();
  const MultichannelWaveform mixture = manifest.load_mixture();

  const fs::path dir(estimates_dir);
  std::ifstream tin(dir / "trace.json");
  if (!tin)
    throw IoError((dir / "trace.json").string() +
                  ": missing trace.json (run separate/stream first)");
  json jtrace;
  try {
    tin >> jtrace;
  } catch (const json::exception& e) {
    throw IoError((dir / "trace.json").string() + ": invalid JSON: " +
                  e.what());
  }
  const int ref = jtrace.value("reference_channel", 1);
  if (ref < 1 || ref > truth.channels())
    throw ConfigError("trace reference channel out of range");

  json jm;
  jm["schema_version"] = 1;
  jm["taps"] = taps;
  jm["reference_channel"] = ref;
  jm["sample_rate"] = manifest.sample_rate;

  // Mixture baseline at the reference channel against every source.
  {
    json sdr = json::array(), snr_arr = json::array();
    for (int s = 0; s < truth.sources(); ++s) {
      sdr.push_back(bsseval_sdr(mixture.samples[ref - 1],
                                truth.images[s].samples[ref - 1], taps)
                        .db);
      snr_arr.push_back(
          snr(mixture.samples[ref - 1], truth.images[s].samples[ref - 1]).db);
    }
    jm["mixture"] = {{"sdr_db", sdr}, {"snr_db", snr_arr}};
  }

  // Truth sliced to the reference channel for single-channel estimates.
  SourceImageSet truth_ref;
  truth_ref.provenance = Provenance::ground_truth;
  for (const auto& img : truth.images) {
    MultichannelWaveform mono =
        make_waveform(1, img.length(), img.sample_rate);
    mono.samples[0] = img.samples[ref - 1];
    truth_ref.images.push_back(std::move(mono));
  }

  auto score = [&](const json& files) {
    std::vector<std::vector<std::string>> grid;
    for (const auto& row : files) {
      std::vector<std::string> r;
      for (const auto& p : row) r.push_back(p.get<std::string>());
      grid.push_back(std::move(r));
    }
    const SourceImageSet est = load_grid_rel(dir, grid, manifest.sample_rate);
    if (est.channels() == truth.channels())
      return metrics_json(report(est, truth, ref, taps));
    if (est.channels() == 1)
      return metrics_json(report(est, truth_ref, 1, taps));
    throw DimensionError("estimate channel count matches neither truth nor 1");
  };

  json entries = json::array();
  for (const auto& e : jtrace.at("entries")) {
    json out;
    out["stage"] = e.at("stage");
    out["iteration"] = e.at("iteration");
    if (e.contains("zhat_files")) out["zhat"] = score(e["zhat_files"]);
    if (e.contains("xhat_files")) out["xhat"] = score(e["xhat_files"]);
    entries.push_back(std::move(out));
  }
  jm["entries"] = std::move(entries);

  const std::string out_path = manifest.metrics_path
                                   ? *manifest.metrics_path
                                   : (dir / "metrics.json").string();
  std::ofstream out(out_path);
  if (!out) throw IoError(out_path + ": cannot write metrics");
  out << jm.dump(2) << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative beamforming-guided multi-channel source separation"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Render a synthetic scene");
  std::string scene_path, sim_out;
  std::uint64_t sim_seed = 0;
  sim->add_option("--spec", scene_path, "Scene description JSON")->required();
  sim->add_option("--out", sim_out, "Output directory")->required();
  CLI::Option* seed_opt =
      sim->add_option("--seed", sim_seed, "Override the scene seed");

  // separate / stream share options
  RunOptions opt;
  auto add_run_options = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", opt.manifest_path, "Manifest JSON")
        ->required();
    cmd->add_option("--estimator", opt.estimator,
                    "oracle-signal|oracle-irm|external|guided-passthrough");
    cmd->add_option("--iterations", opt.iterations,
                    "Guided refinement iterations");
    cmd->add_option("--ref-channel", opt.ref_channel, "Reference channel");
    cmd->add_option("--frame-ms", opt.frame_ms, "STFT frame length (ms)");
    cmd->add_option("--hop-ms", opt.hop_ms, "STFT hop size (ms)");
    cmd->add_option("--loading", opt.loading, "Diagonal loading coefficient");
    cmd->add_option("--out", opt.out_dir, "Output directory")->required();
  };
  auto* sep = app.add_subcommand("separate", "Batch separation");
  add_run_options(sep);
  auto* str = app.add_subcommand("stream", "Frame-by-frame causal separation");
  add_run_options(str);
  bool causal = true;
  str->add_flag("--causal,!--no-causal", causal,
                "Process frame by frame (default)");

  // eval
  auto* ev = app.add_subcommand("eval", "Score estimates against the truth");
  std::string eval_manifest, estimates_dir;
  int taps = 512;
  ev->add_option("--manifest", eval_manifest, "Manifest JSON")->required();
  ev->add_option("--estimates", estimates_dir, "Directory with trace.json")
      ->required();
  ev->add_option("--taps", taps, "Distortion filter length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what(), 1);
  }

  try {
    if (sim->parsed())
      return cmd_simulate(scene_path, sim_out,
                          seed_opt->count() > 0
                              ? std::optional<std::uint64_t>(sim_seed)
                              : std::nullopt);
    if (sep->parsed()) return cmd_separate(opt);
    if (str->parsed()) return cmd_stream(opt, causal);
    if (ev->parsed()) return cmd_eval(eval_manifest, estimates_dir, taps);
  } catch (const IoError& e) {
    fail("io", e.what(), 2);
  } catch (const NumericalError& e) {
    fail("numerical", e.what(), 3);
  } catch (const ConfigError& e) {
    fail("usage", e.what(), 1);
  } catch (const DimensionError& e) {
    fail("usage", e.what(), 1);
  } catch (const Error& e) {
    fail("usage", e.what(), 1);
  }
  return 0;
}
