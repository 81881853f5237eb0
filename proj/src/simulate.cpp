#include "beamsep/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "beamsep/fft.hpp"

namespace beamsep {

namespace {

constexpr int kSincHalfTaps = 32;  // 64-tap interpolation window
constexpr std::size_t kDirectConvLimit = 1024;

double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * u01(rng);
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double distance(const Position& a, const Position& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double power(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return x.empty() ? 0.0 : e / static_cast<double>(x.size());
}

// Bandlimited white noise gated by Hann-shaped bursts.
std::vector<double> make_noise_burst(std::size_t n, int sample_rate,
                                     std::mt19937_64& rng) {
  std::vector<double> white(n);
  for (double& v : white) v = uniform(rng, -1.0, 1.0);

  // 65-tap lowpass at half Nyquist. Keeping the material below 2 kHz at
  // 8 kHz mirrors where speech energy sits and keeps the same source
  // strongly correlated across mics despite inter-channel delays, which the
  // sample-domain SNR similarity of the permutation solver relies on.
  const int taps = 65;
  const double cutoff = 0.25;  // cycles per sample
  std::vector<double> lp(taps);
  for (int i = 0; i < taps; ++i) {
    const double m = i - (taps - 1) / 2.0;
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (taps - 1));
    lp[i] = 2.0 * cutoff * sinc(2.0 * cutoff * m) * w;
  }
  std::vector<double> filtered = convolve(white, lp);
  filtered.resize(n);

  std::vector<double> envelope(n, 0.02);
  const int bursts = std::max<int>(2, static_cast<int>(n / sample_rate) + 1);
  for (int b = 0; b < bursts; ++b) {
    const double center = u01(rng) * static_cast<double>(n);
    const double half = uniform(rng, 0.15, 0.4) * sample_rate;
    const std::size_t lo =
        static_cast<std::size_t>(std::max(0.0, center - half));
    const std::size_t hi =
        std::min<std::size_t>(n, static_cast<std::size_t>(center + half));
    for (std::size_t i = lo; i < hi; ++i) {
      const double phase = (static_cast<double>(i) - (center - half)) /
                           (2.0 * half);
      envelope[i] += 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * phase);
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = 0.5 * filtered[i] * std::min(1.0, envelope[i]);
  return out;
}

// Stationary sum of tones with seeded frequencies and phases.
std::vector<double> make_multitone(std::size_t n, int sample_rate,
                                   std::mt19937_64& rng) {
  const int tones = 10;
  std::vector<double> freq(tones), phase(tones);
  for (int k = 0; k < tones; ++k) {
    freq[k] = uniform(rng, 150.0, 2000.0);
    phase[k] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }
  std::vector<double> out(n, 0.0);
  const double amp = 0.45 / std::sqrt(static_cast<double>(tones));
  for (int k = 0; k < tones; ++k) {
    const double step = 2.0 * std::numbers::pi * freq[k] / sample_rate;
    for (std::size_t i = 0; i < n; ++i)
      out[i] += amp * std::sin(phase[k] + step * static_cast<double>(i));
  }
  return out;
}

std::vector<double> make_dry(const SceneSourceSpec& src, std::size_t n,
                             int sample_rate, std::uint64_t seed) {
  if (!src.dry.empty()) {
    std::vector<double> out = src.dry;
    out.resize(n, 0.0);  // silence appended to shorter material
    return out;
  }
  std::mt19937_64 rng(seed);
  switch (src.kind) {
    case DrySourceKind::noise_burst:
      return make_noise_burst(n, sample_rate, rng);
    case DrySourceKind::multitone:
      return make_multitone(n, sample_rate, rng);
  }
  throw ConfigError("unknown dry source kind");
}

}  // namespace

std::vector<double> generate_anechoic_rir(const SceneGeometry& geometry,
                                          int source_index, int mic_index,
                                          int sample_rate) {
  if (source_index < 0 ||
      source_index >= static_cast<int>(geometry.sources.size()) ||
      mic_index < 0 || mic_index >= static_cast<int>(geometry.mics.size()))
    throw ConfigError("source or mic index out of range");
  const double dist =
      distance(geometry.sources[source_index], geometry.mics[mic_index]);
  if (dist <= 0.0) throw ConfigError("source and mic positions coincide");
  const double delay = dist / geometry.speed_of_sound * sample_rate;
  const double gain = 1.0 / dist;

  const int lo = std::max(0, static_cast<int>(std::ceil(delay)) - kSincHalfTaps);
  const int hi = static_cast<int>(std::floor(delay)) + kSincHalfTaps;
  std::vector<double> h(static_cast<std::size_t>(hi) + 1, 0.0);
  for (int i = lo; i <= hi; ++i) {
    const double x = i - delay;
    if (std::abs(x) >= kSincHalfTaps) continue;
    // Blackman-windowed sinc; exact impulse for integer delays.
    const double ph = std::numbers::pi * x / kSincHalfTaps;
    const double w = 0.42 + 0.5 * std::cos(ph) + 0.08 * std::cos(2.0 * ph);
    h[i] = gain * sinc(x) * w;
  }
  return h;
}

std::vector<double> convolve(std::span<const double> x,
                             std::span<const double> h) {
  if (x.empty() || h.empty()) throw DimensionError("convolve operands empty");
  const std::size_t out_len = x.size() + h.size() - 1;
  if (h.size() < kDirectConvLimit) {
    std::vector<double> out(out_len, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t j = 0; j < h.size(); ++j) out[i + j] += xi * h[j];
    }
    return out;
  }
  std::size_t nfft = 1;
  while (nfft < out_len) nfft <<= 1;
  auto fx = fft::rfft(x, static_cast<int>(nfft));
  const auto fh = fft::rfft(h, static_cast<int>(nfft));
  for (std::size_t i = 0; i < fx.size(); ++i) fx[i] *= fh[i];
  std::vector<double> out = fft::irfft(fx, static_cast<int>(nfft));
  out.resize(out_len);
  return out;
}

RenderedScene render_scene(const SceneSpec& spec) {
  if (spec.sources.empty()) throw ConfigError("scene has no sources");
  if (spec.sample_rate <= 0 || spec.duration_s <= 0.0)
    throw ConfigError("invalid sample rate or duration");
  const int nsrc = spec.source_count();
  const int chans = spec.channels();
  if (chans < 1) throw ConfigError("scene has no microphones");
  if (!spec.rirs.empty()) {
    if (static_cast<int>(spec.rirs.size()) != nsrc)
      throw ConfigError("RIR source count does not match scene sources");
    for (const auto& per_source : spec.rirs)
      if (static_cast<int>(per_source.size()) != chans)
        throw ConfigError("RIR channel count inconsistent");
  }
  const std::size_t n = static_cast<std::size_t>(
      std::llround(spec.duration_s * spec.sample_rate));
  if (n == 0) throw ConfigError("scene duration too short");

  // Draw order is fixed: SIR first, then per-source material seeds.
  std::mt19937_64 scene_rng(spec.seed);
  const double sir_db =
      spec.sir_db ? *spec.sir_db
                  : uniform(scene_rng, spec.sir_range[0], spec.sir_range[1]);

  SourceImageSet truth;
  truth.provenance = Provenance::ground_truth;
  truth.stage_tag = {0, 0};
  for (int s = 0; s < nsrc; ++s) {
    const std::vector<double> dry = make_dry(
        spec.sources[s], n, spec.sample_rate,
        spec.seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(s + 1));
    MultichannelWaveform image = make_waveform(chans, n, spec.sample_rate);
    for (int c = 0; c < chans; ++c) {
      const std::vector<double> rir =
          spec.rirs.empty()
              ? generate_anechoic_rir(spec.geometry, s, c, spec.sample_rate)
              : spec.rirs[s][c];
      std::vector<double> img = convolve(dry, rir);
      img.resize(n);
      image.samples[c] = std::move(img);
    }
    truth.images.push_back(std::move(image));
  }

  // Interferers are scaled on every channel so the channel-1 power ratio
  // against source 1 hits the SIR target.
  const double p1 = power(truth.images[0].samples[0]);
  if (p1 <= 0.0) throw ConfigError("source 1 is silent on channel 1");
  for (int s = 1; s < nsrc; ++s) {
    const double ps = power(truth.images[s].samples[0]);
    if (ps <= 0.0)
      throw ConfigError("source " + std::to_string(s + 1) +
                        " is silent on channel 1");
    const double gain = std::sqrt(p1 / (ps * std::pow(10.0, sir_db / 10.0)));
    for (int c = 0; c < chans; ++c)
      for (double& v : truth.images[s].samples[c]) v *= gain;
  }

  RenderedScene scene;
  scene.sir_db_used = sir_db;
  scene.mixture = mix_images(truth);
  if (spec.noise_snr_db) {
    const double pm = power(scene.mixture.samples[0]);
    const double target = pm / std::pow(10.0, *spec.noise_snr_db / 10.0);
    // Uniform white noise has variance range^2 / 12.
    const double amp = std::sqrt(12.0 * target) / 2.0;
    for (int c = 0; c < chans; ++c)
      for (double& v : scene.mixture.samples[c])
        v += uniform(scene_rng, -amp, amp);
  }
  scene.truth = std::move(truth);
  return scene;
}

}  // namespace beamsep
