#include "wasn/metrics.hpp"

#include "wasn/dsp.hpp"

#include <cinttypes>
#include <cstdio>

namespace wasn {

double snr(const Eigen::Ref<const Vec>& output, const Eigen::Ref<const Vec>& noise_component) {
  if (output.size() != noise_component.size()) throw std::invalid_argument("length mismatch");
  if (output.size() == 0) throw std::invalid_argument("empty signals");
  const double total = mean_power(output);
  const double noise = mean_power(noise_component);
  if (noise <= 0.0) throw std::runtime_error("undefined SNR: zero noise power");
  // Sample estimates can push the speech power slightly negative when the
  // target is all but cancelled; floor instead of returning NaN.
  const double speech = std::max(total - noise, 1e-12 * noise);
  return db_from_power(speech / noise);
}

double gcc_phat_tdoa(const Eigen::Ref<const Vec>& a, const Eigen::Ref<const Vec>& b, int max_lag,
                     int sample_rate_hz) {
  if (a.size() != b.size()) throw std::invalid_argument("length mismatch");
  if (max_lag < 1) throw std::invalid_argument("max_lag must be positive");
  if (a.size() < 4L * max_lag) throw std::invalid_argument("signals too short for max_lag");

  const int n = next_pow2(static_cast<int>(a.size()) + 2 * max_lag);
  std::vector<double> xa(a.data(), a.data() + a.size());
  std::vector<double> xb(b.data(), b.data() + b.size());
  auto sa = rfft(xa, n);
  auto sb = rfft(xb, n);

  // r(tau) = sum_t a(t) b(t + tau): cross-spectrum conj(A) * B, phase only.
  double total_mag = 0.0;
  for (size_t f = 0; f < sa.size(); ++f) {
    cdouble cross = std::conj(sa[f]) * sb[f];
    const double mag = std::abs(cross);
    total_mag += mag;
    sa[f] = mag > 0.0 ? cross / mag : cdouble{0.0, 0.0};
  }
  if (total_mag <= 0.0) throw std::runtime_error("degenerate spectrum");
  const auto corr = irfft(sa, n);

  auto at_lag = [&](long lag) { return corr[(lag % n + n) % n]; };
  long best = -max_lag;
  double best_val = at_lag(-max_lag);
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    const double v = at_lag(lag);
    if (v > best_val) {
      best_val = v;
      best = lag;
    }
  }
  // Parabolic refinement around the peak.
  const double rm = at_lag(best - 1), r0 = at_lag(best), rp = at_lag(best + 1);
  const double denom = rm - 2.0 * r0 + rp;
  double delta = 0.0;
  if (denom < 0.0) delta = 0.5 * (rm - rp) / denom;
  if (std::abs(delta) > 1.0) delta = 0.0;
  return (static_cast<double>(best) + delta) / sample_rate_hz;
}

double ate(const std::vector<double>& estimated, const std::vector<double>& theoretical) {
  if (estimated.size() != theoretical.size()) throw std::invalid_argument("length mismatch");
  if (estimated.empty()) throw std::invalid_argument("ATE needs at least two nodes");
  double acc = 0.0;
  for (size_t i = 0; i < estimated.size(); ++i) acc += std::abs(theoretical[i] - estimated[i]);
  return acc / static_cast<double>(estimated.size());
}

const char* kCsvHeader =
    "setup,t60_s,radius_m,vad_error,beamformer,rep,node,metric,value,seed,config_hash";

std::string format_csv_row(const CsvRow& row) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6g,%.6g,%s,%s,%d,%s,%.12g,%" PRIu64 ",%016" PRIx64,
                row.setup.c_str(), row.t60_s, row.radius_m, row.vad_error, row.beamformer.c_str(),
                row.rep.c_str(), row.node, row.metric.c_str(), row.value, row.seed,
                row.config_hash);
  return buf;
}

}  // namespace wasn
