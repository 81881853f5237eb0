#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "beamsep/metrics.hpp"
#include "beamsep/pipeline.hpp"
#include "scenes.hpp"

using namespace beamsep;
namespace bt = beamsep::testing;

namespace {

PipelineConfig oracle_config(const SourceImageSet& truth) {
  PipelineConfig cfg;
  cfg.estimator_stage1.kind = EstimatorKind::oracle_signal;
  cfg.estimator_stage1.truth = truth;
  cfg.estimator_stage2.kind = EstimatorKind::oracle_signal;
  cfg.estimator_stage2.truth = truth;
  return cfg;
}

bool same_images(const SourceImageSet& a, const SourceImageSet& b) {
  if (a.sources() != b.sources()) return false;
  for (int s = 0; s < a.sources(); ++s)
    if (a.images[s].samples != b.images[s].samples) return false;
  return true;
}

}  // namespace

TEST_CASE("the oracle-signal stage separates the demo scene cleanly") {
  const RenderedScene scene = render_scene(bt::demo_scene(0, 4.0));
  PipelineConfig cfg = oracle_config(scene.truth);

  const StageTraceEntry entry = run_stage(
      cfg, cfg.estimator_stage1, scene.mixture, std::nullopt, {1, 0});
  CHECK(entry.beamformed.provenance == Provenance::beamformed);
  CHECK(entry.beamformed.sources() == 2);
  CHECK(entry.beamformed.channels() == 4);
  CHECK(entry.beamformed.length() == scene.mixture.length());

  for (int s = 0; s < 2; ++s) {
    const double sdr =
        bsseval_sdr(entry.beamformed.images[s].samples[0],
                    scene.truth.images[s].samples[0], 512)
            .db;
    const double mix_sdr = bsseval_sdr(scene.mixture.samples[0],
                                       scene.truth.images[s].samples[0], 512)
                               .db;
    CHECK(sdr >= 15.0);
    CHECK(sdr >= mix_sdr + 10.0);
  }
}

TEST_CASE("a single perfectly-estimated source passes through") {
  SceneSpec sc = bt::demo_scene(2, 2.0);
  sc.geometry.sources.resize(1);
  sc.sources.resize(1);
  const RenderedScene scene = render_scene(sc);
  PipelineConfig cfg = oracle_config(scene.truth);

  const StageTraceEntry entry = run_stage(
      cfg, cfg.estimator_stage1, scene.mixture, std::nullopt, {1, 0});
  // Z == Y exactly, so per-bin filters reduce to projections of the
  // mixture; at the reference the output stays close to the mixture.
  const double s = snr(entry.beamformed.images[0].samples[0],
                       scene.mixture.samples[0])
                       .db;
  CHECK(s >= 20.0);
}

TEST_CASE("two runs produce bit-identical outputs") {
  const RenderedScene scene = render_scene(bt::demo_scene(0, 2.0));
  PipelineConfig cfg = oracle_config(scene.truth);
  cfg.iterations = 1;
  const auto [out1, trace1] = run_iterative(cfg, scene.mixture);
  const auto [out2, trace2] = run_iterative(cfg, scene.mixture);
  CHECK(same_images(out1, out2));
  CHECK(same_images(trace1[0].estimator_output, trace2[0].estimator_output));
}

TEST_CASE("a constant stage-2 estimator is a fixed point of the iteration") {
  const RenderedScene scene = render_scene(bt::demo_scene(0, 2.0));
  PipelineConfig cfg = oracle_config(scene.truth);
  cfg.iterations = 4;
  const auto [final_out, trace] = run_iterative(cfg, scene.mixture);
  REQUIRE(trace.size() == 5);
  CHECK(trace[0].tag == StageTag{1, 0});
  CHECK(trace[4].tag == StageTag{2, 4});
  // oracle_signal ignores guidance: all stage-2 passes are identical.
  for (std::size_t k = 2; k < trace.size(); ++k)
    CHECK(same_images(trace[k].beamformed, trace[1].beamformed));
  CHECK(same_images(final_out, trace[4].beamformed));
}

TEST_CASE("zero iterations reduce to the first stage bit-exactly") {
  const RenderedScene scene = render_scene(bt::demo_scene(0, 2.0));
  PipelineConfig cfg = oracle_config(scene.truth);
  cfg.iterations = 0;
  const auto [out, trace] = run_iterative(cfg, scene.mixture);
  REQUIRE(trace.size() == 1);

  const StageTraceEntry stage1 = run_stage(
      cfg, cfg.estimator_stage1, scene.mixture, std::nullopt, {1, 0});
  CHECK(same_images(out, stage1.beamformed));
}

TEST_CASE("guided passthrough cycles stay finite and fully traced") {
  const RenderedScene scene = render_scene(bt::demo_scene(0, 2.0));
  PipelineConfig cfg = oracle_config(scene.truth);
  cfg.estimator_stage2.kind = EstimatorKind::guided_passthrough;
  cfg.iterations = 4;
  const auto [out, trace] = run_iterative(cfg, scene.mixture);
  REQUIRE(trace.size() == 5);
  for (const auto& entry : trace) {
    for (const auto& img : entry.beamformed.images)
      for (const auto& ch : img.samples)
        for (double v : ch) REQUIRE(std::isfinite(v));
    CHECK(entry.estimator_output.sources() == 2);
    CHECK(entry.scm.mean_target_trace.size() == 2);
  }
  // Every stage entry can be scored against the truth.
  for (const auto& entry : trace) {
    const MetricReport rep = report(entry.beamformed, scene.truth, 1, 512);
    CHECK(std::isfinite(rep.mean_sdr_db));
  }
}

TEST_CASE("mimmo channels equal single-reference pipeline runs") {
  const RenderedScene scene = render_scene(bt::demo_scene(0, 2.0));
  PipelineConfig cfg = oracle_config(scene.truth);

  const StageTraceEntry entry = run_stage(
      cfg, cfg.estimator_stage1, scene.mixture, std::nullopt, {1, 0});

  // Reference run: recompute with the single-reference path per channel,
  // from the aligned estimates the stage actually used.
  const ComplexSpectrogram mix_spec = analyze(scene.mixture, cfg.stft);
  std::vector<ComplexSpectrogram> src_specs;
  for (const auto& img : entry.estimator_output.images)
    src_specs.push_back(analyze(img, cfg.stft));
  const ScmField scms = batch_scms(mix_spec, src_specs);
  for (int ref = 1; ref <= 4; ++ref) {
    const BeamformerWeights w = souden_weights(scms, ref, cfg.loading);
    const auto enh = beamform_apply(w, mix_spec);
    for (int s = 0; s < 2; ++s) {
      const MultichannelWaveform wave = synthesize(enh[s]);
      CHECK(entry.beamformed.images[s].samples[ref - 1] == wave.samples[0]);
    }
  }
}

TEST_CASE("reference channels of a symmetric scene perform comparably") {
  const RenderedScene scene = render_scene(bt::demo_scene(0, 4.0));
  PipelineConfig cfg = oracle_config(scene.truth);
  const StageTraceEntry entry = run_stage(
      cfg, cfg.estimator_stage1, scene.mixture, std::nullopt, {1, 0});
  double lo = 1e9, hi = -1e9;
  for (int s = 0; s < 2; ++s)
    for (int c = 0; c < 4; ++c) {
      const double v = bsseval_sdr(entry.beamformed.images[s].samples[c],
                                   scene.truth.images[s].samples[c], 512)
                           .db;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  CHECK(lo >= 15.0);
  CHECK(hi - lo <= 2.5);
}

TEST_CASE("streaming emits prefixes bit-identically") {
  const RenderedScene scene = render_scene(bt::demo_scene(0, 2.0));
  PipelineConfig cfg = oracle_config(scene.truth);
  cfg.mode = PipelineMode::causal;

  // Full-utterance streaming output, no finish needed for the comparison.
  CausalSession full(cfg);
  full.push(scene.mixture);
  const auto full_emitted = full.emitted();

  const std::size_t hop = static_cast<std::size_t>(cfg.stft.hop);
  for (std::size_t prefix_hops : {1ul, 4ul, 8ul}) {
    const std::size_t n = prefix_hops * hop;
    MultichannelWaveform head = make_waveform(4, n, scene.mixture.sample_rate);
    for (int c = 0; c < 4; ++c)
      std::copy(scene.mixture.samples[c].begin(),
                scene.mixture.samples[c].begin() + n, head.samples[c].begin());
    CausalSession part(cfg);
    part.push(head);
    const auto part_emitted = part.emitted();
    for (int s = 0; s < 2; ++s) {
      REQUIRE(part_emitted[s].size() <= full_emitted[s].size());
      for (std::size_t i = 0; i < part_emitted[s].size(); ++i)
        REQUIRE(part_emitted[s][i] == full_emitted[s][i]);
    }
  }

  // Pushing sample by sample changes nothing either.
  CausalSession dribble(cfg);
  const std::size_t chunk = 160;
  for (std::size_t n0 = 0; n0 < scene.mixture.length(); n0 += chunk) {
    const std::size_t n1 = std::min(n0 + chunk, scene.mixture.length());
    MultichannelWaveform block =
        make_waveform(4, n1 - n0, scene.mixture.sample_rate);
    for (int c = 0; c < 4; ++c)
      std::copy(scene.mixture.samples[c].begin() + n0,
                scene.mixture.samples[c].begin() + n1,
                block.samples[c].begin());
    dribble.push(block);
  }
  for (int s = 0; s < 2; ++s)
    CHECK(dribble.emitted()[s] == full_emitted[s]);
}

TEST_CASE("the finished stream has full length and matches batch SCMs") {
  const RenderedScene scene = render_scene(bt::demo_scene(0, 2.0));
  PipelineConfig cfg = oracle_config(scene.truth);
  cfg.mode = PipelineMode::causal;

  CausalSession session(cfg);
  session.push(scene.mixture);
  session.finish();
  for (int s = 0; s < 2; ++s)
    CHECK(session.emitted()[s].size() == scene.mixture.length());

  // After all frames the growing average equals the batch SCMs.
  const ComplexSpectrogram mix_spec = analyze(scene.mixture, cfg.stft);
  std::vector<ComplexSpectrogram> src_specs;
  for (const auto& img : scene.truth.images)
    src_specs.push_back(analyze(img, cfg.stft));
  const ScmField batch = batch_scms(mix_spec, src_specs);
  const ScmField& causal = session.scms();
  REQUIRE(causal.frames_seen == batch.frames_seen);
  for (int s = 0; s < 2; ++s)
    for (int f = 0; f < batch.bins; f += 97) {
      double diff = 0.0, ref = 0.0;
      for (std::size_t i = 0;
           i < batch.target_at(s, f).matrix().e.size(); ++i) {
        diff += std::norm(causal.target_at(s, f).matrix().e[i] -
                          batch.target_at(s, f).matrix().e[i]);
        ref += std::norm(batch.target_at(s, f).matrix().e[i]);
      }
      CHECK(std::sqrt(diff) <= 1e-10 * std::max(1.0, std::sqrt(ref)));
    }
}

TEST_CASE("causal output converges to the batch output on a static scene") {
  const RenderedScene scene = render_scene(bt::stationary_scene(7, 10.0));
  PipelineConfig cfg = oracle_config(scene.truth);

  const StageTraceEntry batch_entry = run_stage(
      cfg, cfg.estimator_stage1, scene.mixture, std::nullopt, {1, 0});

  cfg.mode = PipelineMode::causal;
  const SourceImageSet streamed = run_causal_stream(cfg, scene.mixture);

  // Compare the tail (frames >= 50, i.e. samples past 50 hops + latency).
  const std::size_t start = 55 * static_cast<std::size_t>(cfg.stft.hop);
  for (int s = 0; s < 2; ++s) {
    double diff = 0.0, ref = 0.0;
    for (std::size_t n = start; n < scene.mixture.length(); ++n) {
      const double b = batch_entry.beamformed.images[s].samples[0][n];
      const double d = streamed.images[s].samples[0][n] - b;
      diff += d * d;
      ref += b * b;
    }
    CHECK(std::sqrt(diff / ref) <= 0.1);
  }
}

TEST_CASE("external estimates can drive every iteration") {
  const RenderedScene scene = render_scene(bt::demo_scene(1, 2.0));
  PipelineConfig cfg;
  cfg.iterations = 2;
  cfg.estimator_stage1.kind = EstimatorKind::external;
  cfg.estimator_stage2.kind = EstimatorKind::external;
  for (const StageTag tag : {StageTag{1, 0}, StageTag{2, 1}, StageTag{2, 2}}) {
    cfg.estimator_stage1.external[tag] = scene.truth;
    cfg.estimator_stage2.external[tag] = scene.truth;
  }
  const auto [out, trace] = run_iterative(cfg, scene.mixture);
  REQUIRE(trace.size() == 3);
  CHECK(out.channels() == 4);

  // A missing iteration entry surfaces with its stage tag.
  cfg.iterations = 3;
  CHECK_THROWS_WITH_AS(run_iterative(cfg, scene.mixture),
                       doctest::Contains("stage 2 iteration 3"), ConfigError);
}

TEST_CASE("causal config validation") {
  const RenderedScene scene = render_scene(bt::demo_scene(0, 1.0));
  PipelineConfig cfg = oracle_config(scene.truth);
  cfg.mode = PipelineMode::causal;
  cfg.estimator_stage1.kind = EstimatorKind::oracle_irm;
  CHECK_THROWS_AS(CausalSession{cfg}, ConfigError);

  cfg.estimator_stage1.kind = EstimatorKind::oracle_signal;
  CausalSession session(cfg);
  session.push(scene.mixture);
  session.finish();
  CHECK_THROWS_AS(session.push(scene.mixture), ConfigError);

  PipelineConfig batch_cfg = oracle_config(scene.truth);
  batch_cfg.mode = PipelineMode::causal;
  CHECK_THROWS_AS(run_iterative(batch_cfg, scene.mixture), ConfigError);
}

TEST_CASE("stage errors carry the stage tag") {
  const RenderedScene scene = render_scene(bt::demo_scene(0, 1.0));
  PipelineConfig cfg;  // no truth set
  cfg.estimator_stage1.kind = EstimatorKind::oracle_signal;
  CHECK_THROWS_WITH_AS(run_iterative(cfg, scene.mixture),
                       doctest::Contains("stage 1"), ConfigError);
}
