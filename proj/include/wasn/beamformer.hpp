#pragma once

#include "wasn/common.hpp"
#include "wasn/covariance.hpp"

#include <vector>

namespace wasn {

/// Stacked constraint columns for one frequency bin, partitioned per node,
/// with each node's desired-gain vector referred to its reference microphone.
struct ConstraintBasis {
  NodeLayout layout;
  CMat stacked;                 // M x S
  std::vector<CVec> node_gains; // per node: S entries (conjugate reference row times selection)
  std::vector<int> reference_rows;  // global row index of each node's reference microphone

  int num_sources() const { return static_cast<int>(stacked.cols()); }
  CMat node_block(int j) const {
    return stacked.middleRows(layout.offset_of(j), layout.mics_at(j));
  }
};

/// Aggregated fusion result for one (bin, frame). `gram` and `compressed` are
/// empty at nodes that only ever see the flooded solution (tree non-root).
struct FusionState {
  CMat gram;       // S x S, sum of node gram blocks
  CVec compressed; // S, sum of node compressed signals
  CVec fused;      // S, gram^{-1} * compressed
  bool used_pseudo_inverse = false;
};

/// Builds the constraint basis from per-node steering blocks. `selection` holds
/// the desired response per source (ones/zeros typically); the reference row of
/// node j defaults to its first microphone.
ConstraintBasis build_basis(const std::vector<CMat>& node_blocks, const Vec& selection,
                            const std::vector<int>& reference_mics = {});

/// w = R^{-1} Q (Q^H R^{-1} Q)^{-1} gains_j for the full-network covariance R.
CVec centralized_lcmv(const CMat& noise_cov, const ConstraintBasis& basis, int node);

/// Sum per-node blocks in node-index order and solve for the fused vector.
FusionState dnbd_fuse(const std::vector<CMat>& gram_blocks, const std::vector<CVec>& z_blocks);

/// Solve gram * fused = compressed with the pseudo-inverse fallback.
void solve_fusion(FusionState& state);

cdouble node_output(const FusionState& fusion, const ConstraintBasis& basis, int node);

/// Q (Q^H Q)^{-1} gains_j; covariance-free, computed once per basis.
CVec dnds_weights(const ConstraintBasis& basis, int node);

/// Which covariance feeds the minimum-variance pipelines: the noise-only
/// estimate (LCMV) or the noisy-signal estimate (LCMP, no VAD needed).
enum class CovarianceKind { NoiseCov, NoisyCov };

}  // namespace wasn
