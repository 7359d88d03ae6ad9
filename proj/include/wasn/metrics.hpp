#pragma once

#include "wasn/common.hpp"

#include <string>
#include <vector>

namespace wasn {

/// Output SNR from the beamformed signal and its shadow-filtered noise
/// component: 10 log10((E{d^2} - E{n^2}) / E{n^2}).
double snr(const Eigen::Ref<const Vec>& output, const Eigen::Ref<const Vec>& noise_component);

/// Phase-transform cross-correlation delay of b relative to a, in seconds,
/// with 3-point parabolic sub-sample interpolation.
double gcc_phat_tdoa(const Eigen::Ref<const Vec>& a, const Eigen::Ref<const Vec>& b, int max_lag,
                     int sample_rate_hz);

/// Mean absolute TDOA error across nodes 2..J, relative to node 1.
double ate(const std::vector<double>& estimated, const std::vector<double>& theoretical);

struct EvalResult {
  std::vector<double> snr_db;          // per node
  std::vector<double> tdoa_error_s;    // per node j >= 2 (index 0 is node 2)
  double ate_s = 0.0;
  std::uint64_t tx_reals_total = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

struct CsvRow {
  std::string setup;
  double t60_s = 0.0;
  double radius_m = 0.0;
  double vad_error = 0.0;
  std::string beamformer;
  std::string rep;  // repetition index or "mean"
  int node = -1;    // -1 for aggregate rows
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

extern const char* kCsvHeader;
std::string format_csv_row(const CsvRow& row);

}  // namespace wasn
