#include "wasn/metrics.hpp"

#include "wasn/scene.hpp"

#include <doctest.h>

using namespace wasn;

TEST_CASE("SNR arithmetic") {
  const long n = 4096;
  Vec s(n), noise(n);
  for (long t = 0; t < n; ++t) {
    s(t) = (t % 2 == 0) ? 1.0 : -1.0;          // unit power
    noise(t) = (t % 4 < 2) ? 1.0 : -1.0;       // unit power, orthogonal to s
  }
  SUBCASE("orthogonal unit-power components give 0 dB") {
    CHECK(snr(s + noise, noise) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("one-percent noise power gives 20 dB") {
    const Vec d = s + 0.1 * noise;
    CHECK(snr(d, 0.1 * noise) == doctest::Approx(20.0).epsilon(1e-10));
  }
  SUBCASE("scaling both signals leaves the ratio unchanged") {
    const Vec d = s + 0.3 * noise;
    const double base = snr(d, 0.3 * noise);
    const double scaled = snr(5.0 * d, Vec(5.0 * 0.3 * noise));
    CHECK(std::abs(base - scaled) < 1e-10);
  }
  SUBCASE("zero noise power is undefined") {
    CHECK_THROWS_AS(snr(s, Vec::Zero(n)), std::runtime_error);
  }
}

TEST_CASE("GCC-PHAT delay estimation") {
  Rng rng(1);
  const long n = 8192;
  Vec a(n);
  for (long t = 0; t < n; ++t) a(t) = rng.gaussian();

  SUBCASE("integer delay is recovered exactly") {
    Vec b = Vec::Zero(n);
    for (long t = 17; t < n; ++t) b(t) = a(t - 17);
    const double tdoa = gcc_phat_tdoa(a, b, 64, 8000);
    CHECK(tdoa == doctest::Approx(17.0 / 8000.0).epsilon(1e-9));
  }
  SUBCASE("identical signals have zero delay") {
    CHECK(gcc_phat_tdoa(a, a, 64, 8000) == doctest::Approx(0.0));
  }
  SUBCASE("per-channel gains do not move the peak") {
    Vec b = Vec::Zero(n);
    for (long t = 23; t < n; ++t) b(t) = a(t - 23);
    const double plain = gcc_phat_tdoa(a, b, 64, 8000);
    const double scaled = gcc_phat_tdoa(Vec(0.05 * a), Vec(40.0 * b), 64, 8000);
    CHECK(std::abs(plain - scaled) * 8000.0 < 0.5);
  }
  SUBCASE("zero spectra are rejected") {
    CHECK_THROWS_AS(gcc_phat_tdoa(Vec::Zero(n), Vec::Zero(n), 64, 8000), std::runtime_error);
  }
  SUBCASE("signals shorter than four lags are rejected") {
    CHECK_THROWS_AS(gcc_phat_tdoa(a.head(100), a.head(100), 64, 8000), std::invalid_argument);
  }
}

TEST_CASE("GCC-PHAT recovers the geometric TDOA on a rendered anechoic scene") {
  SceneSpec spec;
  spec.room.dimensions = Vec3{6.0, 5.0, 3.0};
  spec.room.t60_s = 0.0;
  spec.nodes.resize(2);
  spec.nodes[0].mic_positions = {Vec3{1.0, 1.0, 1.5}};
  spec.nodes[1].mic_positions = {Vec3{5.2, 3.6, 1.5}};
  spec.speakers = {Vec3{2.4, 3.3, 1.5}};
  spec.sensor_noise_snr_db = 60.0;
  Rng rng(3);
  Vec speech(16000);
  for (long t = 0; t < speech.size(); ++t) speech(t) = rng.gaussian();
  const auto out = render_scene(spec, {speech}, {});

  const double estimated =
      gcc_phat_tdoa(out.mixture.col(0), out.mixture.col(1), 256, 8000);
  const double expected = out.truth.tdoa_seconds(1, 0);
  CHECK(std::abs(estimated - expected) * 8000.0 <= 1.0);
}

TEST_CASE("average TDOA error") {
  SUBCASE("perfect estimates give zero") {
    CHECK(ate({1e-3, -2e-3}, {1e-3, -2e-3}) == 0.0);
  }
  SUBCASE("mean of one and three milliseconds is two milliseconds") {
    CHECK(ate({1e-3, 0.0}, {2e-3, 3e-3}) == doctest::Approx(2e-3));
  }
  SUBCASE("node order does not matter") {
    CHECK(ate({1e-3, 5e-3, 2e-3}, {0.0, 0.0, 0.0}) ==
          ate({5e-3, 2e-3, 1e-3}, {0.0, 0.0, 0.0}));
  }
  SUBCASE("fewer than two nodes is an error") {
    CHECK_THROWS_AS(ate({}, {}), std::invalid_argument);
  }
}

TEST_CASE("CSV rows have a frozen header and stable formatting") {
  CHECK(std::string(kCsvHeader) ==
        "setup,t60_s,radius_m,vad_error,beamformer,rep,node,metric,value,seed,config_hash");
  CsvRow row;
  row.setup = "unit";
  row.t60_s = 0.3;
  row.radius_m = 0.05;
  row.vad_error = 0.05;
  row.beamformer = "dnds";
  row.rep = "0";
  row.node = 2;
  row.metric = "snr_db";
  row.value = 1.25;
  row.seed = 42;
  row.config_hash = 0xabcdef;
  CHECK(format_csv_row(row) == "unit,0.3,0.05,0.05,dnds,0,2,snr_db,1.25,42,0000000000abcdef");
}
