#include "wasn/dsp.hpp"
#include "wasn/scene.hpp"

namespace wasn {

namespace {

constexpr int kInterpTaps = 8;

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

// Hann-windowed sinc taps centered on the fractional arrival time.
void add_image(Vec& rir, double delay_samples, double gain) {
  const int n0 = static_cast<int>(std::floor(delay_samples)) - kInterpTaps / 2 + 1;
  const double frac = delay_samples - std::floor(delay_samples);
  for (int n = 0; n < kInterpTaps; ++n) {
    const double t = (n - 0.5 * kInterpTaps + 1) - frac;
    const double w = 0.5 * (1.0 + std::cos(2.0 * M_PI * t / kInterpTaps));
    const int idx = n0 + n;
    if (idx >= 0 && idx < rir.size()) rir[idx] += gain * w * sinc(M_PI * t);
  }
}

}  // namespace

void RoomSpec::validate() const {
  if (!(dimensions.array() > 0.0).all()) throw std::invalid_argument("room dimensions must be positive");
  if (t60_s < 0.0) throw std::invalid_argument("t60 must be non-negative");
  if (speed_of_sound <= 0.0) throw std::invalid_argument("speed of sound must be positive");
}

Vec generate_rir(const RoomSpec& room, const Vec3& source, const Vec3& mic, int sample_rate_hz,
                 int max_order) {
  room.validate();
  if (!room.contains(source) || !room.contains(mic))
    throw std::invalid_argument("position outside room");
  if ((source - mic).norm() < 1e-9) throw std::invalid_argument("source coincides with microphone");

  const double c = room.speed_of_sound;
  const double fs = sample_rate_hz;
  const double samples_per_meter = fs / c;

  if (room.t60_s == 0.0) {
    const double dist_m = (source - mic).norm();
    const double delay = dist_m * samples_per_meter;
    Vec rir = Vec::Zero(static_cast<int>(std::ceil(delay)) + kInterpTaps);
    add_image(rir, delay, 1.0 / (4.0 * M_PI * dist_m));
    return rir;
  }

  const double volume = room.dimensions.prod();
  const double surface = 2.0 * (room.dimensions(0) * room.dimensions(1) +
                                room.dimensions(0) * room.dimensions(2) +
                                room.dimensions(1) * room.dimensions(2));
  // Sabine absorption for the requested decay; uniform over the six walls.
  const double absorption = 24.0 * volume * std::log(10.0) / (c * room.t60_s * surface);
  if (absorption >= 1.0)
    throw std::invalid_argument("t60 too short for this room (absorption >= 1)");
  const double beta = std::sqrt(1.0 - absorption);

  const int num_samples = static_cast<int>(std::ceil(room.t60_s * fs));
  Vec rir = Vec::Zero(num_samples);

  const Vec3 s = source * samples_per_meter;
  const Vec3 r = mic * samples_per_meter;
  const Vec3 L = room.dimensions * samples_per_meter;
  const int nx = static_cast<int>(std::ceil(num_samples / (2.0 * L(0))));
  const int ny = static_cast<int>(std::ceil(num_samples / (2.0 * L(1))));
  const int nz = static_cast<int>(std::ceil(num_samples / (2.0 * L(2))));

  for (int mx = -nx; mx <= nx; ++mx) {
    for (int my = -ny; my <= ny; ++my) {
      for (int mz = -nz; mz <= nz; ++mz) {
        for (int q = 0; q <= 1; ++q) {
          const double dx = (1 - 2 * q) * s(0) - r(0) + 2.0 * mx * L(0);
          const int ox = std::abs(2 * mx - q);
          for (int j = 0; j <= 1; ++j) {
            const double dy = (1 - 2 * j) * s(1) - r(1) + 2.0 * my * L(1);
            const int oy = std::abs(2 * my - j);
            for (int k = 0; k <= 1; ++k) {
              const double dz = (1 - 2 * k) * s(2) - r(2) + 2.0 * mz * L(2);
              const int oz = std::abs(2 * mz - k);
              if (max_order >= 0 && ox + oy + oz > max_order) continue;
              const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
              if (dist >= num_samples) continue;
              const int reflections = std::abs(mx - q) + std::abs(mx) + std::abs(my - j) +
                                      std::abs(my) + std::abs(mz - k) + std::abs(mz);
              const double gain =
                  std::pow(beta, reflections) / (4.0 * M_PI * dist / samples_per_meter);
              add_image(rir, dist, gain);
            }
          }
        }
      }
    }
  }
  return rir;
}

CVec atf_from_rir(const Vec& rir, const AnalysisConfig& cfg) {
  const int n = cfg.frame_length;
  const int padded = n * static_cast<int>((rir.size() + n - 1) / n);
  std::vector<double> buf(rir.data(), rir.data() + rir.size());
  buf.resize(std::max(padded, n), 0.0);
  const auto spec = rfft(buf, static_cast<int>(buf.size()));
  const int stride = static_cast<int>(buf.size()) / n;
  CVec atf(cfg.num_bins());
  for (int f = 0; f < cfg.num_bins(); ++f) atf(f) = spec[f * stride];
  return atf;
}

std::vector<std::vector<CMat>> steering_blocks(const RoomSpec& room,
                                               const std::vector<NodePlacement>& nodes,
                                               const std::vector<Vec3>& positions,
                                               const AnalysisConfig& cfg, int max_order) {
  const int bins = cfg.num_bins();
  const int sources = static_cast<int>(positions.size());
  std::vector<std::vector<CMat>> out(bins);
  for (int f = 0; f < bins; ++f) {
    out[f].resize(nodes.size());
    for (size_t j = 0; j < nodes.size(); ++j)
      out[f][j].resize(nodes[j].mic_positions.size(), sources);
  }
  for (size_t j = 0; j < nodes.size(); ++j) {
    for (size_t m = 0; m < nodes[j].mic_positions.size(); ++m) {
      for (int s = 0; s < sources; ++s) {
        const Vec rir =
            generate_rir(room, positions[s], nodes[j].mic_positions[m], cfg.sample_rate_hz,
                         max_order);
        const CVec atf = atf_from_rir(rir, cfg);
        for (int f = 0; f < bins; ++f) out[f][j](m, s) = atf(f);
      }
    }
  }
  return out;
}

}  // namespace wasn
