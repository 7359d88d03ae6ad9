#include "wasn/beamformer.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <sstream>

namespace wasn {

ConstraintBasis build_basis(const std::vector<CMat>& node_blocks, const Vec& selection,
                            const std::vector<int>& reference_mics) {
  if (node_blocks.empty()) throw std::invalid_argument("no node blocks");
  const int sources = static_cast<int>(node_blocks.front().cols());
  if (selection.size() != sources)
    throw std::invalid_argument("selection length does not match source count");

  std::vector<int> mics;
  mics.reserve(node_blocks.size());
  for (const auto& b : node_blocks) {
    if (b.cols() != sources) throw std::invalid_argument("inconsistent source count across nodes");
    mics.push_back(static_cast<int>(b.rows()));
  }

  ConstraintBasis basis;
  basis.layout = NodeLayout(mics);
  basis.stacked.resize(basis.layout.num_channels(), sources);
  for (size_t j = 0; j < node_blocks.size(); ++j)
    basis.stacked.middleRows(basis.layout.offset_of(static_cast<int>(j)), mics[j]) =
        node_blocks[j];

  Eigen::JacobiSVD<CMat> svd(basis.stacked);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-10 * sv(0))
    throw std::runtime_error("degenerate constraint set");

  const int num_nodes = basis.layout.num_nodes();
  basis.node_gains.resize(num_nodes);
  basis.reference_rows.resize(num_nodes);
  for (int j = 0; j < num_nodes; ++j) {
    int ref = reference_mics.empty() ? 0 : reference_mics.at(j);
    if (ref < 0 || ref >= basis.layout.mics_at(j))
      throw std::invalid_argument("reference microphone outside node");
    const int row = basis.layout.offset_of(j) + ref;
    basis.reference_rows[j] = row;
    CVec g(sources);
    for (int k = 0; k < sources; ++k) g(k) = selection(k) * std::conj(basis.stacked(row, k));
    basis.node_gains[j] = g;
  }
  return basis;
}

namespace {

std::string condition_message(const char* what, double cond) {
  std::ostringstream os;
  os << what << " (condition estimate " << cond << ")";
  return os.str();
}

}  // namespace

CVec centralized_lcmv(const CMat& noise_cov, const ConstraintBasis& basis, int node) {
  const int m = static_cast<int>(noise_cov.rows());
  if (m != basis.layout.num_channels())
    throw std::invalid_argument("covariance order does not match basis");

  Eigen::LDLT<CMat> ldlt(noise_cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    Eigen::SelfAdjointEigenSolver<CMat> es(noise_cov, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    throw std::runtime_error(
        condition_message("singular noise covariance", hi / std::max(lo, 1e-300)));
  }
  const CMat whitened = ldlt.solve(basis.stacked);  // R^{-1} Q
  CMat gram = basis.stacked.adjoint() * whitened;
  gram = 0.5 * (gram + gram.adjoint());

  Eigen::SelfAdjointEigenSolver<CMat> ges(gram, Eigen::EigenvaluesOnly);
  const double lo = ges.eigenvalues().minCoeff(), hi = ges.eigenvalues().maxCoeff();
  if (lo <= 1e-14 * hi)
    throw std::runtime_error(
        condition_message("singular constraint gram matrix", hi / std::max(lo, 1e-300)));

  return whitened * gram.ldlt().solve(basis.node_gains.at(node));
}

void solve_fusion(FusionState& state) {
  const int s = static_cast<int>(state.gram.rows());
  if (s == 0 || state.gram.norm() == 0.0)
    throw std::runtime_error("insufficient aggregate constraints");

  // Fast path: well-conditioned positive definite gram.
  Eigen::LDLT<CMat> ldlt(state.gram);
  if (ldlt.info() == Eigen::Success) {
    const Vec d = ldlt.vectorD().real();
    if (d.minCoeff() > 1e-10 * d.cwiseAbs().maxCoeff()) {
      state.fused = ldlt.solve(state.compressed);
      state.used_pseudo_inverse = false;
      return;
    }
  }

  Eigen::SelfAdjointEigenSolver<CMat> es(state.gram);
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  const double threshold = 1e-10 * hi;
  if (es.eigenvalues().minCoeff() > threshold) {
    state.fused = state.gram.ldlt().solve(state.compressed);
    state.used_pseudo_inverse = false;
    return;
  }
  // Rank-deficient aggregate; invert on the retained eigenspace only.
  CVec inv_eigs = CVec::Zero(s);
  int rank = 0;
  for (int i = 0; i < s; ++i) {
    if (std::abs(es.eigenvalues()(i)) > threshold) {
      inv_eigs(i) = 1.0 / es.eigenvalues()(i);
      ++rank;
    }
  }
  if (rank == 0) throw std::runtime_error("insufficient aggregate constraints");
  state.fused =
      es.eigenvectors() * inv_eigs.asDiagonal() * (es.eigenvectors().adjoint() * state.compressed);
  state.used_pseudo_inverse = true;
}

FusionState dnbd_fuse(const std::vector<CMat>& gram_blocks, const std::vector<CVec>& z_blocks) {
  if (gram_blocks.empty() || gram_blocks.size() != z_blocks.size())
    throw std::invalid_argument("mismatched fusion inputs");
  const int s = static_cast<int>(gram_blocks.front().rows());
  FusionState st;
  st.gram = CMat::Zero(s, s);
  st.compressed = CVec::Zero(s);
  for (size_t j = 0; j < gram_blocks.size(); ++j) {
    if (gram_blocks[j].rows() != s || gram_blocks[j].cols() != s || z_blocks[j].size() != s)
      throw std::invalid_argument("fusion block dimension mismatch");
    st.gram += gram_blocks[j];
    st.compressed += z_blocks[j];
  }
  solve_fusion(st);
  return st;
}

cdouble node_output(const FusionState& fusion, const ConstraintBasis& basis, int node) {
  return (basis.node_gains.at(node).adjoint() * fusion.fused)(0);
}

CVec dnds_weights(const ConstraintBasis& basis, int node) {
  CMat gram = basis.stacked.adjoint() * basis.stacked;
  gram = 0.5 * (gram + gram.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (lo <= 1e-14 * hi)
    throw std::runtime_error(
        condition_message("rank-deficient basis", hi / std::max(lo, 1e-300)));
  return basis.stacked * gram.ldlt().solve(basis.node_gains.at(node));
}

}  // namespace wasn
