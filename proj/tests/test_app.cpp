#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "beamsep/manifest.hpp"
#include "beamsep/wav.hpp"
#include "test_util.hpp"

using namespace beamsep;
namespace bt = beamsep::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("beamsep_app_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BEAMSEP_CLI_PATH) + " " + args +
                          " > /dev/null 2> /dev/null";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

MultichannelWaveform float_representable(std::mt19937_64& rng, int channels,
                                         std::size_t n) {
  MultichannelWaveform w = make_waveform(channels, n);
  for (int c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < n; ++i)
      w.samples[c][i] =
          static_cast<double>(static_cast<float>(bt::uniform(rng, -1.0, 1.0)));
  return w;
}

}  // namespace

TEST_CASE("float32 wav files round-trip bit-exactly") {
  std::mt19937_64 rng(91);
  const fs::path dir = temp_dir();
  const MultichannelWaveform w = float_representable(rng, 4, 4000);
  write_wav((dir / "a.wav").string(), w, WavFormat::float32);
  const MultichannelWaveform back = read_wav((dir / "a.wav").string());
  CHECK(back.sample_rate == 8000);
  CHECK(back.samples == w.samples);
  fs::remove_all(dir);
}

TEST_CASE("pcm16 honors the scaling convention") {
  const fs::path dir = temp_dir();
  MultichannelWaveform w = make_waveform(1, 4);
  w.samples[0] = {-1.0, 1.0 - 1.0 / 32768.0, 0.5, 0.0};
  write_wav((dir / "p.wav").string(), w, WavFormat::pcm16);
  const MultichannelWaveform back = read_wav((dir / "p.wav").string());
  CHECK(back.samples[0][0] == -1.0);  // full-scale -32768 -> -1.0 exactly
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(std::abs(back.samples[0][i] - w.samples[0][i]) <= 1.0 / 32768.0);

  std::mt19937_64 rng(92);
  MultichannelWaveform noise = make_waveform(2, 500);
  for (int c = 0; c < 2; ++c) noise.samples[c] = bt::random_vec(rng, 500, 0.9);
  write_wav((dir / "n.wav").string(), noise, WavFormat::pcm16);
  const MultichannelWaveform nback = read_wav((dir / "n.wav").string());
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 500; ++i)
      CHECK(std::abs(nback.samples[c][i] - noise.samples[c][i]) <=
            1.0 / 32768.0);
  fs::remove_all(dir);
}

TEST_CASE("malformed wav files raise structured parse errors") {
  const fs::path dir = temp_dir();
  {
    std::ofstream out(dir / "bad.wav", std::ios::binary);
    out << "RIFXxxxxWAVE";
  }
  CHECK_THROWS_WITH_AS(read_wav((dir / "bad.wav").string()),
                       doctest::Contains("RIFF"), IoError);
  {
    std::ofstream out(dir / "short.wav", std::ios::binary);
    out << "RIF";
  }
  CHECK_THROWS_WITH_AS(read_wav((dir / "short.wav").string()),
                       doctest::Contains("truncated"), IoError);
  {
    std::ofstream out(dir / "nofmt.wav", std::ios::binary);
    out << "RIFF";
    const std::uint32_t size = 4;
    out.write(reinterpret_cast<const char*>(&size), 4);
    out << "WAVE";
  }
  CHECK_THROWS_WITH_AS(read_wav((dir / "nofmt.wav").string()),
                       doctest::Contains("fmt"), IoError);
  CHECK_THROWS_AS(read_wav((dir / "absent.wav").string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("manifests round-trip with relative paths") {
  std::mt19937_64 rng(93);
  const fs::path dir = temp_dir();

  Manifest m;
  m.sample_rate = 8000;
  m.channels = 2;
  m.sources = 2;
  m.mixture_path = (dir / "mixture.wav").string();
  for (int s = 0; s < 2; ++s) {
    std::vector<std::string> row;
    for (int c = 0; c < 2; ++c)
      row.push_back((dir / ("t" + std::to_string(s) + std::to_string(c) +
                            ".wav"))
                        .string());
    m.truth_paths.push_back(row);
  }
  m.external_paths[{1, 0}] = m.truth_paths;
  m.external_paths[{2, 1}] = m.truth_paths;
  m.sir_db = 1.5;
  m.seed = 42;

  // Write the referenced audio so loading works.
  MultichannelWaveform mix = float_representable(rng, 2, 600);
  write_wav(m.mixture_path, mix, WavFormat::float32);
  for (const auto& row : m.truth_paths)
    for (const auto& p : row)
      write_wav(p, float_representable(rng, 1, 600), WavFormat::float32);

  m.save((dir / "manifest.json").string());
  const Manifest loaded = Manifest::load((dir / "manifest.json").string());
  CHECK(loaded.channels == 2);
  CHECK(loaded.sources == 2);
  CHECK(loaded.sir_db == 1.5);
  CHECK(loaded.seed == 42);
  CHECK(loaded.mixture_path == m.mixture_path);
  CHECK(loaded.truth_paths == m.truth_paths);

  const MultichannelWaveform lm = loaded.load_mixture();
  CHECK(lm.samples == mix.samples);
  const SourceImageSet truth = loaded.load_truth();
  CHECK(truth.provenance == Provenance::ground_truth);
  CHECK(truth.sources() == 2);
  const auto external = loaded.load_external();
  CHECK(external.size() == 2);
  CHECK(external.contains(StageTag{2, 1}));
  fs::remove_all(dir);
}

TEST_CASE("external estimates round through files bit-exactly") {
  std::mt19937_64 rng(94);
  const fs::path dir = temp_dir();
  const MultichannelWaveform sig = float_representable(rng, 1, 300);
  write_wav((dir / "e.wav").string(), sig, WavFormat::float32);
  const MultichannelWaveform back = read_wav((dir / "e.wav").string());
  CHECK(back.samples[0] == sig.samples[0]);
  fs::remove_all(dir);
}

TEST_CASE("cli maps error classes onto exit codes") {
  CHECK(run_cli("separate --manifest /nonexistent.json --out /tmp/x") == 2);
  CHECK(run_cli("bogus-subcommand") == 1);
  CHECK(run_cli("separate") == 1);  // missing required options
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("cli end to end: simulate, separate, stream, eval") {
  const fs::path dir = temp_dir();
  {
    std::ofstream scene(dir / "scene.json");
    scene << R"({
      "sample_rate": 8000, "duration_s": 1.5, "seed": 3, "sir_db": 0.0,
      "mics": [[0.02,0.02,0],[0.02,-0.02,0],[-0.02,0.02,0],[-0.02,-0.02,0]],
      "sources": [
        {"position": [2.0,0.0,0.0], "kind": "noise_burst"},
        {"position": [-2.0,0.0,0.0], "kind": "multitone"}
      ]})";
  }
  const std::string base = dir.string();
  REQUIRE(run_cli("simulate --spec " + base + "/scene.json --out " + base +
                  "/sim") == 0);
  REQUIRE(fs::exists(dir / "sim" / "manifest.json"));
  REQUIRE(fs::exists(dir / "sim" / "mixture.wav"));
  REQUIRE(fs::exists(dir / "sim" / "truth_s2c4.wav"));

  REQUIRE(run_cli("separate --manifest " + base +
                  "/sim/manifest.json --estimator oracle-signal "
                  "--iterations 0 --out " +
                  base + "/sep") == 0);
  REQUIRE(fs::exists(dir / "sep" / "trace.json"));
  REQUIRE(fs::exists(dir / "sep" / "xhat_s1_c1_stage1_iter0.wav"));
  REQUIRE(fs::exists(dir / "sep" / "zhat_s2_c4_stage1_iter0.wav"));

  REQUIRE(run_cli("stream --manifest " + base +
                  "/sim/manifest.json --estimator oracle-signal --out " +
                  base + "/str") == 0);
  REQUIRE(fs::exists(dir / "str" / "xhat_s1_c1_stage1_iter0.wav"));

  // Flag defaults: 4 refinement iterations, reference channel 1.
  REQUIRE(run_cli("separate --manifest " + base +
                  "/sim/manifest.json --estimator oracle-signal --out " +
                  base + "/dflt") == 0);
  {
    nlohmann::json trace;
    std::ifstream((dir / "dflt" / "trace.json")) >> trace;
    CHECK(trace["iterations"] == 4);
    CHECK(trace["reference_channel"] == 1);
    REQUIRE(trace["entries"].size() == 5);
    CHECK(trace["entries"][0]["stage"] == 1);
    CHECK(trace["entries"][0]["iteration"] == 0);
    CHECK(trace["entries"][4]["stage"] == 2);
    CHECK(trace["entries"][4]["iteration"] == 4);
  }

  REQUIRE(run_cli("eval --manifest " + base + "/sim/manifest.json "
                  "--estimates " +
                  base + "/sep --taps 256") == 0);
  nlohmann::json metrics;
  std::ifstream((dir / "sep" / "metrics.json")) >> metrics;
  CHECK(metrics["schema_version"] == 1);
  CHECK(metrics["entries"].size() == 1);
  CHECK(metrics["entries"][0]["xhat"]["sdr_db"].size() == 2);
  // Oracle-signal beamforming clears the mixture baseline.
  const double xhat = metrics["entries"][0]["xhat"]["mean_sdr_db"];
  const double mix0 = metrics["mixture"]["sdr_db"][0];
  CHECK(xhat > mix0 + 10.0);
  fs::remove_all(dir);
}
