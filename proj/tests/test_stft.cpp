#include "wasn/stft.hpp"

#include "wasn/wav.hpp"

#include <doctest.h>

#include <cstdio>

using namespace wasn;

namespace {

Mat random_signal(long samples, int channels, std::uint64_t seed) {
  Rng rng(seed);
  Mat x(samples, channels);
  for (long t = 0; t < samples; ++t)
    for (int c = 0; c < channels; ++c) x(t, c) = rng.gaussian();
  return x;
}

}  // namespace

TEST_CASE("framing arithmetic: 1 s mono at 8 kHz gives 30 frames of 257 bins") {
  AnalysisConfig cfg;  // 512/256 Hann at 8 kHz
  const auto frames = analyze(random_signal(8000, 1, 1), cfg, NodeLayout({1}));
  CHECK(frames.num_frames() == 30);
  CHECK(frames.num_bins() == 257);
}

TEST_CASE("bin-centered sinusoid concentrates in one bin under a Rect window") {
  AnalysisConfig cfg;
  cfg.window = Window::Rect;
  const int k0 = 37;
  Mat x(8000, 1);
  for (long t = 0; t < x.rows(); ++t)
    x(t, 0) = std::cos(2.0 * M_PI * k0 * static_cast<double>(t % cfg.frame_length) /
                       cfg.frame_length);
  // Aligned frames: hop == frame keeps every frame phase-identical.
  cfg.hop_length = cfg.frame_length;
  const auto frames = analyze(x, cfg, NodeLayout({1}));
  for (const auto& frame : frames.frames) {
    const double peak = std::abs(frame.bins(0, k0));
    CHECK(peak > 1.0);
    for (int f = 0; f < frames.num_bins(); ++f) {
      if (f == k0) continue;
      const double rel_energy = std::norm(frame.bins(0, f)) / (peak * peak);
      CHECK(rel_energy <= 1e-30);  // -300 dB
    }
  }
}

TEST_CASE("analyze/synthesize round trip is exact on the interior") {
  AnalysisConfig cfg;
  const Mat x = random_signal(8000, 2, 7);
  const NodeLayout layout({2});

  SUBCASE("Hann, 50% overlap") {
    const Mat y = synthesize(analyze(x, cfg, layout));
    const long lo = cfg.frame_length;
    const long hi = static_cast<long>(y.rows()) - cfg.frame_length;
    const double err = (y.block(lo, 0, hi - lo, 2) - x.block(lo, 0, hi - lo, 2)).norm() /
                       x.block(lo, 0, hi - lo, 2).norm();
    CHECK(err < 1e-10);
  }
  SUBCASE("Rect, no overlap") {
    cfg.window = Window::Rect;
    cfg.hop_length = cfg.frame_length;
    const Mat y = synthesize(analyze(x, cfg, layout));
    const double err = (y - x.topRows(y.rows())).norm() / x.topRows(y.rows()).norm();
    CHECK(err < 1e-10);
  }
}

TEST_CASE("linearity of analysis") {
  AnalysisConfig cfg;
  const NodeLayout layout({1});
  const Mat x = random_signal(4096, 1, 11);
  const Mat y = random_signal(4096, 1, 13);
  const double a = 1.7, b = -0.3;
  const auto fx = analyze(x, cfg, layout);
  const auto fy = analyze(y, cfg, layout);
  const auto fz = analyze(a * x + b * y, cfg, layout);
  for (int l = 0; l < fz.num_frames(); ++l) {
    const CMat lhs = fz.frames[l].bins;
    const CMat rhs = a * fx.frames[l].bins + b * fy.frames[l].bins;
    CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
  }
}

TEST_CASE("Parseval: one-sided spectral energy matches windowed time energy") {
  AnalysisConfig cfg;
  const NodeLayout layout({1});
  const Mat x = random_signal(4096, 1, 17);
  const auto frames = analyze(x, cfg, layout);
  const auto win = make_window(cfg.window, cfg.frame_length);
  for (int l = 0; l < frames.num_frames(); ++l) {
    double spectral = 0.0;
    for (int f = 0; f < frames.num_bins(); ++f) {
      const double weight = (f == 0 || f == frames.num_bins() - 1) ? 1.0 : 2.0;
      spectral += weight * std::norm(frames.frames[l].bins(0, f));
    }
    spectral /= cfg.frame_length;
    double time_energy = 0.0;
    for (int t = 0; t < cfg.frame_length; ++t) {
      const double v = win[t] * x(static_cast<long>(l) * cfg.hop_length + t, 0);
      time_energy += v * v;
    }
    CHECK(spectral == doctest::Approx(time_energy).epsilon(1e-9));
  }
}

TEST_CASE("synthesize edge cases") {
  AnalysisConfig cfg;
  SUBCASE("zero frames give a zero-length signal") {
    SpectralFrames frames;
    frames.cfg = cfg;
    frames.layout = NodeLayout({1});
    CHECK(synthesize(frames).rows() == 0);
  }
  SUBCASE("single all-ones frame is the impulse under a Rect window") {
    cfg.window = Window::Rect;
    cfg.hop_length = cfg.frame_length;
    SpectralFrames frames;
    frames.cfg = cfg;
    frames.layout = NodeLayout({1});
    frames.frames.resize(1);
    frames.frames[0].frame_index = 0;
    frames.frames[0].bins = CMat::Ones(1, cfg.num_bins());
    const Mat y = synthesize(frames);
    CHECK(y(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(y.bottomRows(y.rows() - 1).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("inconsistent bin counts are rejected") {
    SpectralFrames frames;
    frames.cfg = cfg;
    frames.layout = NodeLayout({1});
    frames.frames.resize(2);
    frames.frames[0].bins = CMat::Ones(1, cfg.num_bins());
    frames.frames[1].bins = CMat::Ones(1, cfg.num_bins() - 1);
    CHECK_THROWS_AS(synthesize(frames), std::invalid_argument);
  }
}

TEST_CASE("ragged per-channel input is rejected") {
  AnalysisConfig cfg;
  std::vector<Vec> channels{Vec::Zero(4096), Vec::Zero(4000)};
  CHECK_THROWS_WITH_AS(analyze(channels, cfg, NodeLayout({2})), "ragged input",
                       std::invalid_argument);
}

TEST_CASE("config validation") {
  AnalysisConfig cfg;
  cfg.frame_length = 500;  // not a power of two
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.frame_length = 512;
  cfg.hop_length = 600;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("wav round trips") {
  const std::string path16 = "test_pcm16.wav";
  const std::string path32 = "test_f32.wav";
  Mat x = 0.5 * random_signal(2000, 3, 23);
  WavData wav{8000, x};

  write_wav(path32, wav, WavFormat::Float32);
  const auto back32 = read_wav(path32);
  CHECK(back32.sample_rate_hz == 8000);
  CHECK(back32.samples.cols() == 3);
  CHECK((back32.samples - x).cwiseAbs().maxCoeff() < 1e-7);  // float32 mantissa

  write_wav(path16, wav, WavFormat::Pcm16);
  const auto back16 = read_wav(path16);
  CHECK((back16.samples - x).cwiseAbs().maxCoeff() < 1.0 / 32000.0);

  std::remove(path16.c_str());
  std::remove(path32.c_str());
}
