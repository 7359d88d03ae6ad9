#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wasn {

using cdouble = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Vec3 = Eigen::Vector3d;

constexpr double kSpeedOfSound = 343.0;

/// How the stacked M-channel vector splits into per-node sub-vectors.
class NodeLayout {
 public:
  NodeLayout() = default;
  explicit NodeLayout(std::vector<int> mics_per_node) : mics_(std::move(mics_per_node)) {
    offsets_.reserve(mics_.size() + 1);
    int off = 0;
    for (int m : mics_) {
      if (m < 1) throw std::invalid_argument("node must have at least one microphone");
      offsets_.push_back(off);
      off += m;
    }
    offsets_.push_back(off);
  }

  int num_nodes() const { return static_cast<int>(mics_.size()); }
  int num_channels() const { return offsets_.empty() ? 0 : offsets_.back(); }
  int mics_at(int node) const { return mics_.at(node); }
  int offset_of(int node) const { return offsets_.at(node); }
  const std::vector<int>& mics_per_node() const { return mics_; }

  bool operator==(const NodeLayout& o) const { return mics_ == o.mics_; }

 private:
  std::vector<int> mics_;
  std::vector<int> offsets_;
};

// splitmix64; used for seeding and for hashing parameter tuples into sub-seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t s = mix64(base ^ 0x632be59bd9b4e019ull);
  s = mix64(s ^ a);
  s = mix64(s ^ b);
  s = mix64(s ^ c);
  return s;
}

/// Deterministic xoshiro256++ stream. Distributions are implemented inline so
/// identical seeds give identical draws on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) {
      s = mix64(s);
      w = s;
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  cdouble complex_gaussian() {
    // Circularly symmetric, unit variance overall.
    return {gaussian() * M_SQRT1_2, gaussian() * M_SQRT1_2};
  }

  /// Uniform direction on the unit sphere.
  Vec3 unit_sphere() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * M_PI);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

/// FNV-1a, stable across runs; used for config hashes recorded in output rows.
inline std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline double db_from_power(double p) { return 10.0 * std::log10(p); }
inline double power_from_db(double db) { return std::pow(10.0, db / 10.0); }

inline double mean_power(const Eigen::Ref<const Vec>& x) {
  return x.size() == 0 ? 0.0 : x.squaredNorm() / static_cast<double>(x.size());
}

}  // namespace wasn
