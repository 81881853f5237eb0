#include "beamsep/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace beamsep {

namespace {

std::string tag_str(StageTag tag) {
  return "stage " + std::to_string(tag.stage) + " iteration " +
         std::to_string(tag.iteration);
}

ScmSummary summarize(const ScmField& scms, long fallback_bins) {
  ScmSummary sum;
  sum.fallback_bins = fallback_bins;
  sum.mean_target_trace.assign(static_cast<std::size_t>(scms.sources), 0.0);
  sum.mean_interfer_trace.assign(static_cast<std::size_t>(scms.sources), 0.0);
  for (int s = 0; s < scms.sources; ++s) {
    double tt = 0.0, it = 0.0;
    for (int f = 0; f < scms.bins; ++f) {
      tt += scms.target_at(s, f).trace().real();
      it += scms.interfer_at(s, f).trace().real();
    }
    sum.mean_target_trace[s] = tt / scms.bins;
    sum.mean_interfer_trace[s] = it / scms.bins;
  }
  return sum;
}

bool causal_capable(EstimatorKind kind) {
  return kind == EstimatorKind::oracle_signal ||
         kind == EstimatorKind::external;
}

}  // namespace

void PipelineConfig::validate() const {
  stft.validate();
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (reference_channel < 1) throw ConfigError("reference channel must be >= 1");
  if (loading < 0.0) throw ConfigError("loading must be >= 0");
  if (mode == PipelineMode::causal && !causal_capable(estimator_stage1.kind))
    throw ConfigError(
        "causal mode supports the oracle_signal and external estimators");
}

StageTraceEntry run_stage(const PipelineConfig& config,
                          const EstimatorSpec& estimator,
                          const MultichannelWaveform& mixture,
                          const std::optional<SourceImageSet>& guidance,
                          StageTag tag) {
  try {
    StageTraceEntry entry;
    entry.tag = tag;

    SourceImageSet est = estimate(estimator, mixture, guidance, tag, config.stft);
    est.validate();
    if (est.channels() != mixture.channels() || est.length() != mixture.length())
      throw DimensionError("estimator output does not match mixture");

    auto [aligned, perms] = batch_align(est);
    entry.permutations = std::move(perms);

    const ComplexSpectrogram mix_spec = analyze(mixture, config.stft);
    std::vector<ComplexSpectrogram> src_specs;
    src_specs.reserve(aligned.images.size());
    for (const auto& img : aligned.images)
      src_specs.push_back(analyze(img, config.stft));
    const ScmField scms = batch_scms(mix_spec, src_specs);

    long fallback = 0;
    SourceImageSet beamformed =
        mimmo_beamform(scms, mix_spec, config.loading, &fallback);
    beamformed.stage_tag = tag;

    entry.scm = summarize(scms, fallback);
    entry.estimator_output = std::move(aligned);
    entry.beamformed = std::move(beamformed);
    return entry;
  } catch (const DimensionError& e) {
    throw DimensionError(tag_str(tag) + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(tag_str(tag) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(tag_str(tag) + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(tag_str(tag) + ": " + e.what());
  }
}

std::pair<SourceImageSet, StageTrace> run_iterative(
    const PipelineConfig& config, const MultichannelWaveform& mixture) {
  config.validate();
  mixture.validate();
  if (config.mode != PipelineMode::batch)
    throw ConfigError("run_iterative runs in batch mode; use run_causal_stream");

  StageTrace trace;
  StageTraceEntry first = run_stage(config, config.estimator_stage1, mixture,
                                    std::nullopt, StageTag{1, 0});
  SourceImageSet current = first.beamformed;
  trace.push_back(std::move(first));
  for (int k = 1; k <= config.iterations; ++k) {
    StageTraceEntry entry = run_stage(config, config.estimator_stage2, mixture,
                                      current, StageTag{2, k});
    current = entry.beamformed;
    trace.push_back(std::move(entry));
  }
  return {std::move(current), std::move(trace)};
}

struct CausalSession::Impl {
  PipelineConfig cfg;
  int chans = 0;
  int nsrc = 0;
  std::size_t hop = 0;
  std::size_t head = 0;

  SourceImageSet est_signals;
  std::vector<std::vector<double>> mix_padded;            // [c], head zeros first
  std::vector<std::vector<std::vector<double>>> est_padded;  // [s][c]

  std::size_t pushed = 0;
  int frames_done = 0;
  bool finished = false;

  CausalAligner aligner;
  ScmField scms;
  std::vector<OverlapAdd> olas;
  std::vector<std::vector<double>> emitted;
  std::vector<std::size_t> skip_remaining;

  Impl(const PipelineConfig& config, SourceImageSet est)
      : cfg(config),
        chans(est.channels()),
        nsrc(est.sources()),
        hop(static_cast<std::size_t>(config.stft.hop)),
        head(static_cast<std::size_t>(config.stft.head_pad())),
        est_signals(std::move(est)),
        aligner(nsrc, chans),
        scms(make_scm_field(nsrc, chans, config.stft.bins())),
        skip_remaining(static_cast<std::size_t>(nsrc), head) {
    mix_padded.assign(static_cast<std::size_t>(chans),
                      std::vector<double>(head, 0.0));
    est_padded.assign(static_cast<std::size_t>(nsrc),
                      std::vector<std::vector<double>>(
                          static_cast<std::size_t>(chans),
                          std::vector<double>(head, 0.0)));
    olas.assign(static_cast<std::size_t>(nsrc), OverlapAdd(cfg.stft));
    emitted.assign(static_cast<std::size_t>(nsrc), {});
  }

  void append_input(const MultichannelWaveform& block) {
    if (block.channels() != chans)
      throw DimensionError("pushed block channel count does not match");
    const std::size_t len = block.length();
    if (pushed + len > est_signals.length())
      throw ConfigError("input stream longer than the estimator signals");
    for (int c = 0; c < chans; ++c)
      mix_padded[c].insert(mix_padded[c].end(), block.samples[c].begin(),
                           block.samples[c].end());
    for (int s = 0; s < nsrc; ++s)
      for (int c = 0; c < chans; ++c) {
        const auto& sig = est_signals.images[s].samples[c];
        est_padded[s][c].insert(est_padded[s][c].end(), sig.begin() + pushed,
                                sig.begin() + pushed + len);
      }
    pushed += len;
  }

  void pad_to(std::size_t padded_len) {
    for (int c = 0; c < chans; ++c)
      if (mix_padded[c].size() < padded_len) mix_padded[c].resize(padded_len, 0.0);
    for (int s = 0; s < nsrc; ++s)
      for (int c = 0; c < chans; ++c)
        if (est_padded[s][c].size() < padded_len)
          est_padded[s][c].resize(padded_len, 0.0);
  }

  void process_frame(int t) {
    const int bins = cfg.stft.bins();
    FrameSpectra mix_frame = make_frame(chans, bins);
    for (int c = 0; c < chans; ++c) {
      auto spec = analyze_frame(mix_padded[c], t, cfg.stft);
      std::copy(spec.begin(), spec.end(),
                mix_frame.v.begin() + static_cast<std::size_t>(c) * bins);
    }
    std::vector<FrameSpectra> est_frames(
        static_cast<std::size_t>(nsrc), make_frame(chans, bins));
    for (int s = 0; s < nsrc; ++s)
      for (int c = 0; c < chans; ++c) {
        auto spec = analyze_frame(est_padded[s][c], t, cfg.stft);
        std::copy(spec.begin(), spec.end(),
                  est_frames[s].v.begin() + static_cast<std::size_t>(c) * bins);
      }

    // Alignment sees the raw samples received up to this frame, never past
    // the end of the pushed input.
    const std::size_t n1 =
        std::min(static_cast<std::size_t>(t + 1) * hop, pushed);
    const std::size_t n0 = std::min(aligner.samples_seen(), n1);
    const PermutationMap perm = aligner.update(est_signals, n0, n1);

    std::vector<FrameSpectra> aligned(
        static_cast<std::size_t>(nsrc), make_frame(chans, bins));
    for (int s = 0; s < nsrc; ++s)
      for (int c = 0; c < chans; ++c) {
        const FrameSpectra& src = est_frames[perm.pi[c][s]];
        for (int f = 0; f < bins; ++f) aligned[s].at(c, f) = src.at(c, f);
      }

    causal_scm_update(scms, mix_frame, aligned);
    const std::vector<CVector> out = causal_mvdr_frame(
        scms, mix_frame, cfg.reference_channel, cfg.loading);

    for (int s = 0; s < nsrc; ++s) {
      olas[s].add_frame(t, out[s]);
      std::vector<double> chunk =
          olas[s].take_finalized(static_cast<std::size_t>(t + 1) * hop);
      // The first head_pad finalized samples are the head padding.
      const std::size_t skip = std::min(skip_remaining[s], chunk.size());
      skip_remaining[s] -= skip;
      emitted[s].insert(emitted[s].end(), chunk.begin() + skip, chunk.end());
    }
    ++frames_done;
  }

  void drain() {
    while ((static_cast<std::size_t>(frames_done) + 1) * hop <= pushed)
      process_frame(frames_done);
  }
};

CausalSession::CausalSession(const PipelineConfig& config) {
  config.validate();
  if (config.mode != PipelineMode::causal)
    throw ConfigError("CausalSession requires causal mode");

  SourceImageSet est;
  switch (config.estimator_stage1.kind) {
    case EstimatorKind::oracle_signal:
      est = config.estimator_stage1.truth;
      break;
    case EstimatorKind::external: {
      auto it = config.estimator_stage1.external.find(StageTag{1, 0});
      if (it == config.estimator_stage1.external.end())
        throw ConfigError("no external estimate for stage 1 iteration 0");
      est = it->second;
      break;
    }
    default:
      throw ConfigError(
          "causal mode supports the oracle_signal and external estimators");
  }
  est.validate();
  impl_ = std::make_unique<Impl>(config, std::move(est));
}

CausalSession::~CausalSession() = default;

void CausalSession::push(const MultichannelWaveform& block) {
  if (impl_->finished) throw ConfigError("push after finish");
  impl_->append_input(block);
  impl_->drain();
}

void CausalSession::finish() {
  if (impl_->finished) return;
  impl_->finished = true;
  if (impl_->pushed == 0) return;
  const int total = impl_->cfg.stft.frame_count(impl_->pushed);
  impl_->pad_to(impl_->cfg.stft.padded_len(impl_->pushed));
  while (impl_->frames_done < total) impl_->process_frame(impl_->frames_done);
  for (auto& sig : impl_->emitted)
    if (sig.size() > impl_->pushed) sig.resize(impl_->pushed);
}

const std::vector<std::vector<double>>& CausalSession::emitted() const {
  return impl_->emitted;
}

const std::vector<PermutationMap>& CausalSession::permutation_history() const {
  return impl_->aligner.history();
}

const ScmField& CausalSession::scms() const { return impl_->scms; }

int CausalSession::frames_processed() const { return impl_->frames_done; }

SourceImageSet run_causal_stream(const PipelineConfig& config,
                                 const MultichannelWaveform& mixture) {
  mixture.validate();
  CausalSession session(config);
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
  return out;
}

}  // namespace beamsep
