#pragma once

#include "wasn/common.hpp"

#include <deque>
#include <optional>
#include <vector>

namespace wasn {

/// Per-node covariance block (or its inverse). Hermitian by construction.
struct HermitianBlock {
  CMat matrix;
  bool is_inverse = false;

  int order() const { return static_cast<int>(matrix.rows()); }
  bool is_hermitian(double tol = 1e-12) const;
  bool is_positive_definite() const;
  double smallest_eigenvalue() const;
};

struct SmoothingConfig {
  enum class Mode { NonRecursive, Recursive };
  Mode mode = Mode::Recursive;
  int block_frames = 100;    // B, non-recursive
  double forgetting = 0.95;  // alpha in (0,1), recursive
  double diagonal_loading = -1.0;  // epsilon; < 0 selects 1e-6 * trace/M

  void validate() const;
};

/// What a node transmits on a noise-only frame instead of its full block:
/// the basis-projected update vector and the observation's quadratic power.
struct RankOnePayload {
  CVec projection;     // S entries
  double quad_power = 0.0;  // >= 0 while the tracked inverse stays PD
};

double resolve_loading(double requested, const CMat& cov);

/// Mean of y y^H over the given noise-only frames, plus diagonal loading.
HermitianBlock estimate_block_nonrecursive(const std::vector<CVec>& noise_frames,
                                           double diagonal_loading = -1.0);

/// Entire-horizon estimate with VAD-error contamination: frames listed in
/// `misdetected` contribute their noisy observation, all others contribute
/// their noise-only component; normalized by the full horizon length.
HermitianBlock estimate_block_entire_horizon(const std::vector<CVec>& noisy_frames,
                                             const std::vector<CVec>& noise_frames,
                                             const std::vector<int>& misdetected,
                                             double diagonal_loading = -1.0);

struct SmwResult {
  HermitianBlock next_inverse;
  RankOnePayload payload;
  CVec gain;  // inverse_prev * y, stays node-local
};

/// Rank-1 forgetting-factor update of a tracked inverse. `basis_block` is the
/// node's constraint columns, used to project the payload.
SmwResult smw_update(const HermitianBlock& inverse_prev, const CVec& observation,
                     const CMat& basis_block, double forgetting);

struct RemoteReconstruction {
  CMat gram_next;       // S x S
  CVec compressed;      // S
};

/// Rebuild a remote node's gram block and compressed signal from its rank-1
/// payload, without access to its raw observations.
RemoteReconstruction reconstruct_remote(const CMat& gram_prev, const RankOnePayload& payload,
                                        double forgetting);

struct TrackerConfig {
  double forgetting = 0.95;
  double init_power = -1.0;   // <= 0: taken from the first observed frame
  double init_scale = 1e-3;   // epsilon_0 = init_scale * init_power
  int seed_frames = 10;       // B_0; 0 disables seeding/reseeding
  double diagonal_loading = -1.0;
};

/// Recursive inverse-covariance state machine for one (node, bin) pair.
/// Frames must arrive in order; speech frames freeze the inverse bit-for-bit.
class RecursiveInverseTracker {
 public:
  RecursiveInverseTracker(int order, const TrackerConfig& cfg);
  RecursiveInverseTracker(CMat initial_inverse, const TrackerConfig& cfg);

  struct FrameOutput {
    CVec compressed;                       // z_j(l)
    std::optional<RankOnePayload> payload; // present on noise frames
    bool reseeded = false;                 // full block must be rebroadcast
  };

  FrameOutput advance(const CVec& observation, bool speech_active, const CMat& basis_block);

  /// Apply the current inverse to an arbitrary vector (shadow streams).
  CVec compress(const CVec& x, const CMat& basis_block) const;

  const CMat& inverse() const { return inverse_; }
  CMat gram(const CMat& basis_block) const;
  bool seeded() const { return seeded_; }

 private:
  void ensure_initialized(const CVec& observation);
  void reseed_from_buffer();

  TrackerConfig cfg_;
  int order_;
  CMat inverse_;
  bool initialized_ = false;
  bool seeded_ = false;
  int noise_frames_seen_ = 0;
  std::deque<CVec> noise_buffer_;
};

}  // namespace wasn
