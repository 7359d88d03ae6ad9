#include "wasn/covariance.hpp"

#include <doctest.h>

using namespace wasn;

namespace {

CVec random_cvec(Rng& rng, int n) {
  CVec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.complex_gaussian();
  return v;
}

CMat random_cmat(Rng& rng, int rows, int cols) {
  CMat m(rows, cols);
  for (int c = 0; c < cols; ++c) m.col(c) = random_cvec(rng, rows);
  return m;
}

CMat random_pd(Rng& rng, int n) {
  const CMat g = random_cmat(rng, n, n);
  return g * g.adjoint() + 0.1 * CMat::Identity(n, n);
}

}  // namespace

TEST_CASE("non-recursive estimate") {
  Rng rng(1);

  SUBCASE("a single frame without loading is rank one and reported as such") {
    const CVec y = random_cvec(rng, 3);
    const auto block = estimate_block_nonrecursive({y}, 0.0);
    CHECK((block.matrix - y * y.adjoint()).norm() < 1e-14);
    CHECK(block.is_hermitian());
    CHECK_FALSE(block.is_positive_definite());
  }
  SUBCASE("large-sample estimate of white noise approaches the identity") {
    const int m = 3, n = 10000;
    std::vector<CVec> frames;
    frames.reserve(n);
    for (int i = 0; i < n; ++i) frames.push_back(random_cvec(rng, m));
    const auto block = estimate_block_nonrecursive(frames, 0.0);
    const double rel = (block.matrix - CMat::Identity(m, m)).norm() /
                       CMat::Identity(m, m).norm();
    CHECK(rel < 0.05);
    CHECK(block.is_positive_definite());
  }
  SUBCASE("duplicated frames average to the single-frame estimate") {
    const CVec y = random_cvec(rng, 4);
    const auto one = estimate_block_nonrecursive({y}, 1e-4);
    const auto two = estimate_block_nonrecursive({y, y}, 1e-4);
    CHECK((one.matrix - two.matrix).norm() < 1e-14);
  }
  SUBCASE("empty frame set is an error") {
    CHECK_THROWS_WITH_AS(estimate_block_nonrecursive({}), "no noise frames in block",
                         std::invalid_argument);
  }
}

TEST_CASE("entire-horizon estimate with VAD-error contamination") {
  Rng rng(2);
  const int m = 4, frames = 64;
  std::vector<CVec> noise, noisy;
  const CVec steering = random_cvec(rng, m);
  for (int l = 0; l < frames; ++l) {
    noise.push_back(random_cvec(rng, m));
    noisy.push_back(noise.back() + 3.0 * steering * rng.complex_gaussian());
  }

  SUBCASE("no misdetections: pure noise covariance") {
    const auto block = estimate_block_entire_horizon(noisy, noise, {}, 0.0);
    const auto reference = estimate_block_nonrecursive(noise, 0.0);
    CHECK((block.matrix - reference.matrix).norm() < 1e-12);
  }
  SUBCASE("all frames misdetected: noisy covariance") {
    std::vector<int> all(frames);
    for (int l = 0; l < frames; ++l) all[l] = l;
    const auto block = estimate_block_entire_horizon(noisy, noise, all, 0.0);
    const auto reference = estimate_block_nonrecursive(noisy, 0.0);
    CHECK((block.matrix - reference.matrix).norm() < 1e-12);
  }
  SUBCASE("contamination raises the top eigenvalue") {
    const auto clean = estimate_block_entire_horizon(noisy, noise, {}, 0.0);
    const auto dirty = estimate_block_entire_horizon(noisy, noise, {0, 5, 9}, 0.0);
    Eigen::SelfAdjointEigenSolver<CMat> ec(clean.matrix), ed(dirty.matrix);
    CHECK(ed.eigenvalues().maxCoeff() > ec.eigenvalues().maxCoeff());
  }
  SUBCASE("misdetected set outside the horizon is rejected") {
    CHECK_THROWS_AS(estimate_block_entire_horizon(noisy, noise, {frames + 3}),
                    std::invalid_argument);
  }
}

TEST_CASE("rank-one inverse update") {
  Rng rng(3);
  const double alpha = 0.95;

  SUBCASE("zero observation just rescales the inverse") {
    HermitianBlock inv{CMat::Identity(4, 4), true};
    const auto r = smw_update(inv, CVec::Zero(4), random_cmat(rng, 4, 2), alpha);
    CHECK((r.next_inverse.matrix - CMat::Identity(4, 4) / alpha).norm() < 1e-14);
    CHECK(r.payload.quad_power == 0.0);
    CHECK(r.payload.projection.norm() == 0.0);
  }
  SUBCASE("matches the direct inverse of the smoothed covariance") {
    for (int trial = 0; trial < 20; ++trial) {
      const int m = 1 + static_cast<int>(rng.below(12));
      const CMat cov = random_pd(rng, m);
      const CVec y = random_cvec(rng, m);
      HermitianBlock inv{cov.ldlt().solve(CMat::Identity(m, m)), true};
      const auto r = smw_update(inv, y, random_cmat(rng, m, 2), alpha);
      const CMat next = alpha * cov + (1.0 - alpha) * (y * y.adjoint());
      const CMat direct = next.ldlt().solve(CMat::Identity(m, m));
      CHECK((r.next_inverse.matrix - direct).norm() / direct.norm() < 1e-10);
    }
  }
  SUBCASE("thousand-frame chain stays on the direct-inversion trajectory") {
    const int m = 4;
    const CMat basis = random_cmat(rng, m, 2);
    CMat cov = CMat::Identity(m, m);
    HermitianBlock inv{CMat::Identity(m, m), true};
    double worst = 0.0;
    for (int l = 0; l < 1000; ++l) {
      const CVec y = random_cvec(rng, m);
      const auto r = smw_update(inv, y, basis, alpha);
      inv = r.next_inverse;
      cov = alpha * cov + (1.0 - alpha) * (y * y.adjoint());
      const CMat direct = cov.ldlt().solve(CMat::Identity(m, m));
      worst = std::max(worst, (inv.matrix - direct).norm() / direct.norm());
    }
    CHECK(worst < 1e-6);
    CHECK(inv.is_hermitian());
  }
  SUBCASE("indefinite state is reported as lost positive definiteness") {
    CMat bad = CMat::Identity(3, 3);
    bad(2, 2) = -1.0;
    HermitianBlock inv{bad, true};
    CVec y = CVec::Zero(3);
    y(2) = 1.0;
    CHECK_THROWS_WITH_AS(smw_update(inv, y, random_cmat(rng, 3, 2), alpha),
                         "PD violated, re-initialize", std::runtime_error);
  }
  SUBCASE("non-finite input is rejected") {
    HermitianBlock inv{CMat::Identity(3, 3), true};
    CVec y = CVec::Zero(3);
    y(0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(smw_update(inv, y, random_cmat(rng, 3, 2), alpha), std::invalid_argument);
  }
}

TEST_CASE("remote reconstruction") {
  Rng rng(4);
  const double alpha = 0.9;

  SUBCASE("zero payload rescales the gram and clears the compressed signal") {
    const CMat d = random_pd(rng, 2);
    RankOnePayload payload;
    payload.projection = CVec::Zero(2);
    payload.quad_power = 0.0;
    const auto rec = reconstruct_remote(d, payload, alpha);
    CHECK((rec.gram_next - d / alpha).norm() < 1e-14);
    CHECK(rec.compressed.norm() == 0.0);
  }
  SUBCASE("remote state tracks the sender's local computation") {
    const int m = 5, s = 2;
    const CMat basis = random_cmat(rng, m, s);
    const CMat cov = random_pd(rng, m);
    CMat inv = cov.ldlt().solve(CMat::Identity(m, m));
    inv = 0.5 * (inv + inv.adjoint());
    CMat remote_gram = basis.adjoint() * inv * basis;
    double worst = 0.0;
    for (int l = 0; l < 400; ++l) {
      const CVec y = random_cvec(rng, m);
      const auto r = smw_update({inv, true}, y, basis, alpha);
      inv = r.next_inverse.matrix;
      const auto rec = reconstruct_remote(remote_gram, r.payload, alpha);
      remote_gram = rec.gram_next;
      const CMat local_gram = basis.adjoint() * inv * basis;
      const CVec local_z = basis.adjoint() * (inv * y);
      worst = std::max(worst, (remote_gram - local_gram).norm());
      worst = std::max(worst, (rec.compressed - local_z).norm());
      CHECK((remote_gram - remote_gram.adjoint()).norm() <= 1e-12 * remote_gram.norm());
    }
    CHECK(worst < 1e-10);
  }
  SUBCASE("dimension mismatch is rejected") {
    RankOnePayload payload;
    payload.projection = CVec::Zero(3);
    CHECK_THROWS_AS(reconstruct_remote(CMat::Identity(2, 2), payload, alpha),
                    std::invalid_argument);
  }
}

TEST_CASE("recursive tracker state machine") {
  Rng rng(5);
  TrackerConfig cfg;
  cfg.forgetting = 0.95;
  cfg.init_power = 1.0;
  cfg.seed_frames = 0;
  const CMat basis = random_cmat(rng, 3, 2);

  SUBCASE("speech frames freeze the inverse bit for bit") {
    RecursiveInverseTracker tracker(3, cfg);
    tracker.advance(random_cvec(rng, 3), false, basis);
    const CMat before = tracker.inverse();
    tracker.advance(random_cvec(rng, 3), true, basis);
    tracker.advance(random_cvec(rng, 3), true, basis);
    CHECK((tracker.inverse() - before).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("seeding replaces the scaled-identity start after B0 noise frames") {
    TrackerConfig seeded = cfg;
    seeded.seed_frames = 3;
    RecursiveInverseTracker tracker(3, seeded);
    CHECK_FALSE(tracker.seeded());
    auto r0 = tracker.advance(random_cvec(rng, 3), false, basis);
    CHECK(r0.payload.has_value());
    tracker.advance(random_cvec(rng, 3), false, basis);
    const auto r2 = tracker.advance(random_cvec(rng, 3), false, basis);
    CHECK(r2.reseeded);
    CHECK_FALSE(r2.payload.has_value());
    CHECK(tracker.seeded());
    CHECK(HermitianBlock{tracker.inverse(), true}.is_positive_definite());
  }
  SUBCASE("a poisoned inverse recovers from the noise buffer") {
    TrackerConfig recover = cfg;
    recover.seed_frames = 4;
    CMat bad = CMat::Identity(3, 3);
    bad(2, 2) = -0.5;
    RecursiveInverseTracker tracker(bad, recover);
    // Benign frame first so the recovery buffer is not empty.
    CVec safe = CVec::Zero(3);
    safe(0) = 1.0;
    tracker.advance(safe, false, basis);
    CVec trigger = CVec::Zero(3);
    trigger(2) = 1.0;
    const auto out = tracker.advance(trigger, false, basis);
    CHECK(out.reseeded);
    CHECK(HermitianBlock{tracker.inverse(), true}.is_positive_definite());
  }
}
