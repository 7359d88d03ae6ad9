#include "wasn/covariance.hpp"

#include <Eigen/Eigenvalues>

namespace wasn {

bool HermitianBlock::is_hermitian(double tol) const {
  const double scale = std::max(1.0, matrix.norm());
  return (matrix - matrix.adjoint()).norm() <= tol * scale;
}

double HermitianBlock::smallest_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<CMat> es(matrix, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool HermitianBlock::is_positive_definite() const {
  return smallest_eigenvalue() > 0.0;
}

void SmoothingConfig::validate() const {
  if (mode == Mode::Recursive && (forgetting <= 0.0 || forgetting >= 1.0))
    throw std::invalid_argument("forgetting factor must lie in (0, 1)");
  if (mode == Mode::NonRecursive && block_frames < 1)
    throw std::invalid_argument("block must contain at least one frame");
}

double resolve_loading(double requested, const CMat& cov) {
  if (requested >= 0.0) return requested;
  const double tr = cov.real().trace();
  return 1e-6 * tr / std::max<int>(1, static_cast<int>(cov.rows()));
}

namespace {

CMat hermitize(const CMat& a) { return 0.5 * (a + a.adjoint()); }

}  // namespace

HermitianBlock estimate_block_nonrecursive(const std::vector<CVec>& noise_frames,
                                           double diagonal_loading) {
  if (noise_frames.empty()) throw std::invalid_argument("no noise frames in block");
  const int m = static_cast<int>(noise_frames.front().size());
  CMat acc = CMat::Zero(m, m);
  for (const auto& y : noise_frames) {
    if (y.size() != m) throw std::invalid_argument("frame dimension mismatch");
    acc.noalias() += y * y.adjoint();
  }
  acc /= static_cast<double>(noise_frames.size());
  const double eps = resolve_loading(diagonal_loading, acc);
  acc += eps * CMat::Identity(m, m);
  return {hermitize(acc), false};
}

HermitianBlock estimate_block_entire_horizon(const std::vector<CVec>& noisy_frames,
                                             const std::vector<CVec>& noise_frames,
                                             const std::vector<int>& misdetected,
                                             double diagonal_loading) {
  const int total = static_cast<int>(noisy_frames.size());
  if (total == 0) throw std::invalid_argument("empty horizon");
  if (noise_frames.size() != noisy_frames.size())
    throw std::invalid_argument("noise and noisy streams must cover the same horizon");
  std::vector<bool> contaminated(total, false);
  for (int l : misdetected) {
    if (l < 0 || l >= total)
      throw std::invalid_argument("misdetected frame set is not a subset of the horizon");
    contaminated[l] = true;
  }
  const int m = static_cast<int>(noisy_frames.front().size());
  CMat acc = CMat::Zero(m, m);
  for (int l = 0; l < total; ++l) {
    const CVec& y = contaminated[l] ? noisy_frames[l] : noise_frames[l];
    acc.noalias() += y * y.adjoint();
  }
  acc /= static_cast<double>(total);
  const double eps = resolve_loading(diagonal_loading, acc);
  acc += eps * CMat::Identity(m, m);
  return {hermitize(acc), false};
}

SmwResult smw_update(const HermitianBlock& inverse_prev, const CVec& observation,
                     const CMat& basis_block, double forgetting) {
  if (!inverse_prev.is_inverse)
    throw std::invalid_argument("smw_update expects an inverse block");
  const double alpha = forgetting;
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::invalid_argument("forgetting factor must lie in (0, 1)");
  if (!observation.allFinite() || !inverse_prev.matrix.allFinite())
    throw std::invalid_argument("non-finite input");

  SmwResult r;
  r.gain = inverse_prev.matrix * observation;
  const double c = (observation.adjoint() * r.gain)(0).real();
  if (c < 0.0) throw std::runtime_error("PD violated, re-initialize");
  r.payload.projection = basis_block.adjoint() * r.gain;
  r.payload.quad_power = c;

  const double denom = alpha / (1.0 - alpha) + c;
  CMat next = (inverse_prev.matrix - (r.gain * r.gain.adjoint()) / denom) / alpha;
  r.next_inverse = {hermitize(next), true};
  return r;
}

RemoteReconstruction reconstruct_remote(const CMat& gram_prev, const RankOnePayload& payload,
                                        double forgetting) {
  const double alpha = forgetting;
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::invalid_argument("forgetting factor must lie in (0, 1)");
  if (gram_prev.rows() != gram_prev.cols() || gram_prev.rows() != payload.projection.size())
    throw std::invalid_argument("payload dimension mismatch");

  const double denom = alpha / (1.0 - alpha) + payload.quad_power;
  RemoteReconstruction out;
  out.gram_next =
      hermitize((gram_prev - (payload.projection * payload.projection.adjoint()) / denom) / alpha);
  out.compressed = (payload.projection / alpha) * (1.0 - payload.quad_power / denom);
  return out;
}

RecursiveInverseTracker::RecursiveInverseTracker(int order, const TrackerConfig& cfg)
    : cfg_(cfg), order_(order) {
  if (cfg_.forgetting <= 0.0 || cfg_.forgetting >= 1.0)
    throw std::invalid_argument("forgetting factor must lie in (0, 1)");
}

RecursiveInverseTracker::RecursiveInverseTracker(CMat initial_inverse, const TrackerConfig& cfg)
    : cfg_(cfg), order_(static_cast<int>(initial_inverse.rows())),
      inverse_(std::move(initial_inverse)), initialized_(true), seeded_(true) {}

void RecursiveInverseTracker::ensure_initialized(const CVec& observation) {
  if (initialized_) return;
  double p = cfg_.init_power;
  if (p <= 0.0) p = std::max(observation.squaredNorm() / order_, 1e-12);
  const double eps0 = cfg_.init_scale * p;
  inverse_ = CMat::Identity(order_, order_) / eps0;
  initialized_ = true;
  if (cfg_.seed_frames <= 0) seeded_ = true;
}

void RecursiveInverseTracker::reseed_from_buffer() {
  std::vector<CVec> frames(noise_buffer_.begin(), noise_buffer_.end());
  auto block = estimate_block_nonrecursive(frames, cfg_.diagonal_loading);
  inverse_ = block.matrix.ldlt().solve(CMat::Identity(order_, order_));
  inverse_ = 0.5 * (inverse_ + inverse_.adjoint());
  seeded_ = true;
}

RecursiveInverseTracker::FrameOutput RecursiveInverseTracker::advance(const CVec& observation,
                                                                      bool speech_active,
                                                                      const CMat& basis_block) {
  if (observation.size() != order_) throw std::invalid_argument("observation dimension mismatch");
  ensure_initialized(observation);

  FrameOutput out;
  if (speech_active) {
    out.compressed = basis_block.adjoint() * (inverse_ * observation);
    return out;
  }

  ++noise_frames_seen_;
  if (cfg_.seed_frames > 0) {
    noise_buffer_.push_back(observation);
    while (static_cast<int>(noise_buffer_.size()) > cfg_.seed_frames) noise_buffer_.pop_front();
  }

  try {
    auto r = smw_update({inverse_, true}, observation, basis_block, cfg_.forgetting);
    inverse_ = r.next_inverse.matrix;
    out.payload = r.payload;
  } catch (const std::runtime_error&) {
    // Lost positive definiteness; rebuild from recent noise frames. The fresh
    // block must be rebroadcast since receivers cannot reconstruct this step.
    if (noise_buffer_.empty()) throw;
    reseed_from_buffer();
    out.reseeded = true;
  }

  if (!seeded_ && noise_frames_seen_ >= cfg_.seed_frames) {
    reseed_from_buffer();
    out.payload.reset();
    out.reseeded = true;
  }

  out.compressed = basis_block.adjoint() * (inverse_ * observation);
  return out;
}

CVec RecursiveInverseTracker::compress(const CVec& x, const CMat& basis_block) const {
  if (!initialized_) throw std::logic_error("tracker not initialized");
  return basis_block.adjoint() * (inverse_ * x);
}

CMat RecursiveInverseTracker::gram(const CMat& basis_block) const {
  if (!initialized_) throw std::logic_error("tracker not initialized");
  CMat g = basis_block.adjoint() * inverse_ * basis_block;
  return 0.5 * (g + g.adjoint());
}

}  // namespace wasn
