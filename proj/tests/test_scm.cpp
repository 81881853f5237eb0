#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "beamsep/scm.hpp"
#include "test_util.hpp"

using namespace beamsep;
namespace bt = beamsep::testing;

namespace {

ComplexSpectrogram random_spec(std::mt19937_64& rng, int channels, int frames,
                               const StftConfig& cfg) {
  ComplexSpectrogram spec = make_spectrogram(channels, frames, cfg, 0);
  for (auto& v : spec.data) v = bt::random_cx(rng);
  return spec;
}

StftConfig tiny_cfg() {
  StftConfig cfg;
  cfg.frame_len = 16;
  cfg.hop = 4;
  cfg.fft_size = 16;
  return cfg;
}

double rel_frob_diff(const HermitianMatrix& a, const HermitianMatrix& b) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < a.matrix().e.size(); ++i) {
    diff += std::norm(a.matrix().e[i] - b.matrix().e[i]);
    ref += std::norm(b.matrix().e[i]);
  }
  return ref > 0.0 ? std::sqrt(diff / ref) : std::sqrt(diff);
}

}  // namespace

TEST_CASE("a perfect estimate zeroes the interference SCM") {
  std::mt19937_64 rng(41);
  const StftConfig cfg = tiny_cfg();
  const ComplexSpectrogram mix = random_spec(rng, 4, 8, cfg);
  const ScmField field = batch_scms(mix, {mix});
  for (int f = 0; f < field.bins; ++f) {
    for (const auto& v : field.interfer_at(0, f).matrix().e)
      CHECK(std::abs(v) == 0.0);
    CHECK(field.target_at(0, f).trace().real() > 0.0);
  }
}

TEST_CASE("constant frames average to a single outer product") {
  const StftConfig cfg = tiny_cfg();
  const int frames = 7;
  ComplexSpectrogram src = make_spectrogram(2, frames, cfg, 0);
  for (int t = 0; t < frames; ++t) {
    src.at(0, t, 3) = cxd(1.0, 0.0);
    src.at(1, t, 3) = cxd(0.0, 1.0);
  }
  ComplexSpectrogram mix = src;  // irrelevant to the target SCM
  const ScmField field = batch_scms(mix, {src});
  const HermitianMatrix& tgt = field.target_at(0, 3);
  CHECK(std::abs(tgt.at(0, 0) - cxd(1.0, 0.0)) <= 1e-12);
  CHECK(std::abs(tgt.at(0, 1) - cxd(0.0, -1.0)) <= 1e-12);
  CHECK(std::abs(tgt.at(1, 0) - cxd(0.0, 1.0)) <= 1e-12);
  CHECK(std::abs(tgt.at(1, 1) - cxd(1.0, 0.0)) <= 1e-12);
}

TEST_CASE("batch SCMs match a naive per-frame summation oracle") {
  std::mt19937_64 rng(42);
  const StftConfig cfg = tiny_cfg();
  const int frames = 16, chans = 3;
  const ComplexSpectrogram mix = random_spec(rng, chans, frames, cfg);
  const ComplexSpectrogram src = random_spec(rng, chans, frames, cfg);
  const ScmField field = batch_scms(mix, {src});

  for (int f = 0; f < field.bins; ++f) {
    CMatrix tgt(chans), itf(chans);
    for (int t = 0; t < frames; ++t)
      for (int i = 0; i < chans; ++i)
        for (int j = 0; j < chans; ++j) {
          tgt.at(i, j) += src.at(i, t, f) * std::conj(src.at(j, t, f));
          const cxd ri = mix.at(i, t, f) - src.at(i, t, f);
          const cxd rj = mix.at(j, t, f) - src.at(j, t, f);
          itf.at(i, j) += ri * std::conj(rj);
        }
    double norm_t = 0.0, diff_t = 0.0, norm_i = 0.0, diff_i = 0.0;
    for (int i = 0; i < chans; ++i)
      for (int j = 0; j < chans; ++j) {
        diff_t += std::norm(field.target_at(0, f).at(i, j) -
                            tgt.at(i, j) / static_cast<double>(frames));
        norm_t += std::norm(tgt.at(i, j) / static_cast<double>(frames));
        diff_i += std::norm(field.interfer_at(0, f).at(i, j) -
                            itf.at(i, j) / static_cast<double>(frames));
        norm_i += std::norm(itf.at(i, j) / static_cast<double>(frames));
      }
    CHECK(std::sqrt(diff_t) <= 1e-12 * std::max(1.0, std::sqrt(norm_t)));
    CHECK(std::sqrt(diff_i) <= 1e-12 * std::max(1.0, std::sqrt(norm_i)));
  }
}

TEST_CASE("recursion base: the first update is the outer product itself") {
  std::mt19937_64 rng(43);
  const int chans = 4, bins = 5;
  ScmField state = make_scm_field(1, chans, bins);
  FrameSpectra mix = make_frame(chans, bins);
  FrameSpectra src = make_frame(chans, bins);
  for (auto& v : mix.v) v = bt::random_cx(rng);
  for (auto& v : src.v) v = bt::random_cx(rng);
  causal_scm_update(state, mix, {src});
  CHECK(state.frames_seen == 1);
  for (int f = 0; f < bins; ++f) {
    HermitianMatrix expect(chans);
    CVector z(chans), r(chans);
    for (int c = 0; c < chans; ++c) {
      z[c] = src.at(c, f);
      r[c] = mix.at(c, f) - src.at(c, f);
    }
    expect.accumulate_outer(z, 1.0);
    CHECK(rel_frob_diff(state.target_at(0, f), expect) == 0.0);
    HermitianMatrix expect_i(chans);
    expect_i.accumulate_outer(r, 1.0);
    CHECK(rel_frob_diff(state.interfer_at(0, f), expect_i) == 0.0);
  }
}

TEST_CASE("causal recursion reproduces the batch average") {
  std::mt19937_64 rng(44);
  const StftConfig cfg = tiny_cfg();
  const int frames = 32, chans = 4, nsrc = 2;
  const ComplexSpectrogram mix = random_spec(rng, chans, frames, cfg);
  std::vector<ComplexSpectrogram> srcs;
  for (int s = 0; s < nsrc; ++s)
    srcs.push_back(random_spec(rng, chans, frames, cfg));

  const ScmField batch = batch_scms(mix, srcs);

  ScmField causal = make_scm_field(nsrc, chans, cfg.bins());
  for (int t = 0; t < frames; ++t) {
    std::vector<FrameSpectra> src_frames;
    for (int s = 0; s < nsrc; ++s) src_frames.push_back(frame_of(srcs[s], t));
    causal_scm_update(causal, frame_of(mix, t), src_frames);
  }
  CHECK(causal.frames_seen == batch.frames_seen);
  for (int s = 0; s < nsrc; ++s)
    for (int f = 0; f < causal.bins; ++f) {
      CHECK(rel_frob_diff(causal.target_at(s, f), batch.target_at(s, f)) <=
            1e-10);
      CHECK(rel_frob_diff(causal.interfer_at(s, f), batch.interfer_at(s, f)) <=
            1e-10);
    }
}

TEST_CASE("all-zero frames keep the SCMs at zero") {
  const int chans = 2, bins = 3;
  ScmField state = make_scm_field(1, chans, bins);
  const FrameSpectra zero = make_frame(chans, bins);
  for (int t = 0; t < 5; ++t) causal_scm_update(state, zero, {zero});
  CHECK(state.frames_seen == 5);
  for (const auto& m : state.target)
    for (const auto& v : m.matrix().e) CHECK(v == cxd(0.0, 0.0));
  for (const auto& m : state.interfer)
    for (const auto& v : m.matrix().e) CHECK(v == cxd(0.0, 0.0));
}

TEST_CASE("SCMs are positive semidefinite under random probes") {
  std::mt19937_64 rng(45);
  const StftConfig cfg = tiny_cfg();
  const ComplexSpectrogram mix = random_spec(rng, 4, 12, cfg);
  const ComplexSpectrogram src = random_spec(rng, 4, 12, cfg);
  const ScmField field = batch_scms(mix, {src});
  for (int probe = 0; probe < 50; ++probe) {
    CVector v(4);
    for (auto& x : v) x = bt::random_cx(rng);
    const int f = static_cast<int>(rng() % field.bins);
    for (const HermitianMatrix* m :
         {&field.target_at(0, f), &field.interfer_at(0, f)}) {
      const CVector mv = matvec(m->matrix(), v);
      cxd quad(0.0, 0.0);
      for (int i = 0; i < 4; ++i) quad += std::conj(v[i]) * mv[i];
      CHECK(quad.real() >= -1e-10);
    }
  }
}

TEST_CASE("permuting sources permutes the SCM fields identically") {
  std::mt19937_64 rng(46);
  const StftConfig cfg = tiny_cfg();
  const ComplexSpectrogram mix = random_spec(rng, 3, 6, cfg);
  const ComplexSpectrogram a = random_spec(rng, 3, 6, cfg);
  const ComplexSpectrogram b = random_spec(rng, 3, 6, cfg);
  const ScmField ab = batch_scms(mix, {a, b});
  const ScmField ba = batch_scms(mix, {b, a});
  for (int f = 0; f < ab.bins; ++f) {
    CHECK(rel_frob_diff(ab.target_at(0, f), ba.target_at(1, f)) == 0.0);
    CHECK(rel_frob_diff(ab.interfer_at(1, f), ba.interfer_at(0, f)) == 0.0);
  }
}

TEST_CASE("dimension mismatches are rejected") {
  const StftConfig cfg = tiny_cfg();
  std::mt19937_64 rng(47);
  const ComplexSpectrogram mix = random_spec(rng, 3, 6, cfg);
  const ComplexSpectrogram bad = random_spec(rng, 2, 6, cfg);
  CHECK_THROWS_AS(batch_scms(mix, {bad}), DimensionError);
  CHECK_THROWS_AS(batch_scms(mix, {}), DimensionError);

  ScmField state = make_scm_field(1, 3, cfg.bins());
  const FrameSpectra wrong = make_frame(2, cfg.bins());
  CHECK_THROWS_AS(causal_scm_update(state, wrong, {wrong}), DimensionError);
}
