#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "beamsep/signal.hpp"

namespace beamsep {

struct Position {
  double x = 0.0, y = 0.0, z = 0.0;
};

enum class DrySourceKind { noise_burst, multitone };

struct SceneGeometry {
  std::vector<Position> mics;
  std::vector<Position> sources;
  double speed_of_sound = 343.0;
};

struct SceneSourceSpec {
  DrySourceKind kind = DrySourceKind::noise_burst;
  std::vector<double> dry;  // empty: generated from kind and scene seed
};

// Deterministic synthetic scene: everything random derives from the seed.
struct SceneSpec {
  int sample_rate = 8000;
  double duration_s = 4.0;
  std::uint64_t seed = 0;
  std::optional<double> sir_db;            // fixed SIR if set
  std::array<double, 2> sir_range{-5.0, 5.0};  // else drawn uniformly
  std::optional<double> noise_snr_db;      // additive white noise on the mixture
  SceneGeometry geometry;                  // used when rirs is empty
  std::vector<SceneSourceSpec> sources;
  std::vector<std::vector<std::vector<double>>> rirs;  // [s][c], overrides geometry

  int source_count() const { return static_cast<int>(sources.size()); }
  int channels() const {
    return rirs.empty() ? static_cast<int>(geometry.mics.size())
                        : static_cast<int>(rirs[0].size());
  }
};

struct RenderedScene {
  MultichannelWaveform mixture;
  SourceImageSet truth;
  double sir_db_used = 0.0;
};

// Single fractional-delay impulse: 64-tap windowed-sinc at
// delay = distance / speed_of_sound, attenuated by 1/distance.
std::vector<double> generate_anechoic_rir(const SceneGeometry& geometry,
                                          int source_index, int mic_index,
                                          int sample_rate);

// Direct convolution below 1024 filter taps, FFT-based above; both routes
// agree to 1e-10.
std::vector<double> convolve(std::span<const double> x,
                             std::span<const double> h);

// Image signals by RIR convolution, interferers scaled so the channel-1
// power ratio against source 1 meets the SIR target, mixture by summation.
RenderedScene render_scene(const SceneSpec& spec);

}  // namespace beamsep
