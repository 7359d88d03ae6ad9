#include "wasn/verify.hpp"

#include "wasn/beamformer.hpp"
#include "wasn/covariance.hpp"
#include "wasn/network.hpp"
#include "wasn/scene.hpp"
#include "wasn/stft.hpp"

#include <functional>
#include <sstream>

namespace wasn {

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

/// Synthetic multichannel spectra: white complex frames, no acoustics needed.
SpectralFrames random_spectra(Rng& rng, const NodeLayout& layout, int bins, int frames) {
  SpectralFrames out;
  out.cfg.frame_length = 2 * (bins - 1);
  out.cfg.hop_length = std::max(1, out.cfg.frame_length / 2);
  out.layout = layout;
  out.frames.resize(frames);
  for (int l = 0; l < frames; ++l) {
    out.frames[l].frame_index = l;
    out.frames[l].bins = random_cmat(rng, layout.num_channels(), bins);
  }
  return out;
}

std::vector<ConstraintBasis> random_basis(Rng& rng, const NodeLayout& layout, int bins,
                                          int sources) {
  std::vector<ConstraintBasis> basis;
  Vec selection = Vec::Zero(sources);
  selection(0) = 1.0;
  for (int f = 0; f < bins; ++f) {
    std::vector<CMat> blocks;
    for (int j = 0; j < layout.num_nodes(); ++j)
      blocks.push_back(random_cmat(rng, layout.mics_at(j), sources));
    basis.push_back(build_basis(blocks, selection));
  }
  return basis;
}

std::vector<std::vector<std::uint8_t>> random_vad(Rng& rng, int nodes, int frames) {
  std::vector<std::uint8_t> flags(frames);
  for (int l = 0; l < frames; ++l) flags[l] = rng.uniform() < 0.4 ? 1 : 0;
  return std::vector<std::vector<std::uint8_t>>(nodes, flags);
}

constexpr double kAlpha = 0.95;
constexpr double kEps0 = 1e-3;

TrackerConfig oracle_tracker_config() {
  TrackerConfig tc;
  tc.forgetting = kAlpha;
  tc.init_power = 1.0;
  tc.init_scale = kEps0;
  tc.seed_frames = 0;
  return tc;
}

/// Direct per-node covariance recursion (the paper's update written plainly),
/// kept independent of the tracked-inverse implementation path.
struct DirectCovariance {
  std::vector<CMat> blocks;
  explicit DirectCovariance(const NodeLayout& layout) {
    for (int j = 0; j < layout.num_nodes(); ++j)
      blocks.push_back(kEps0 * CMat::Identity(layout.mics_at(j), layout.mics_at(j)));
  }
  void advance(const SpectralFrames& spectra, int bin, int frame, bool speech) {
    if (speech) return;
    for (size_t j = 0; j < blocks.size(); ++j) {
      const CVec y = spectra.node_observation(static_cast<int>(j), bin, frame);
      blocks[j] = kAlpha * blocks[j] + (1.0 - kAlpha) * (y * y.adjoint());
    }
  }
  CMat stacked(const NodeLayout& layout) const {
    const int m = layout.num_channels();
    CMat full = CMat::Zero(m, m);
    for (size_t j = 0; j < blocks.size(); ++j)
      full.block(layout.offset_of(static_cast<int>(j)), layout.offset_of(static_cast<int>(j)),
                 layout.mics_at(static_cast<int>(j)), layout.mics_at(static_cast<int>(j))) =
          blocks[j];
    return full;
  }
};

struct Failure {
  std::string detail;
};

using CheckFn = std::function<std::string()>;  // returns detail, throws Failure

std::string check_stft_round_trip() {
  AnalysisConfig cfg;
  Rng rng(11);
  Mat x(8000, 2);
  for (long t = 0; t < x.rows(); ++t)
    for (int c = 0; c < 2; ++c) x(t, c) = rng.gaussian();
  const NodeLayout layout({2});
  const Mat y = synthesize(analyze(x, cfg, layout));
  const long lo = cfg.frame_length, hi = x.rows() - cfg.frame_length;
  const double err = (y.block(lo, 0, hi - lo, 2) - x.block(lo, 0, hi - lo, 2)).norm() /
                     x.block(lo, 0, hi - lo, 2).norm();
  std::ostringstream os;
  os << "interior relative error " << err;
  if (err >= 1e-10) throw Failure{os.str()};
  return os.str();
}

std::string check_smw_vs_direct(int frames) {
  Rng rng(22);
  const int m = 4;
  const CMat basis_block = random_cmat(rng, m, 2);
  RecursiveInverseTracker tracker(m, oracle_tracker_config());
  CMat direct = kEps0 * CMat::Identity(m, m);
  double worst = 0.0;
  for (int l = 0; l < frames; ++l) {
    const CVec y = random_cvec(rng, m);
    const bool speech = rng.uniform() < 0.3;
    tracker.advance(y, speech, basis_block);
    if (!speech) direct = kAlpha * direct + (1.0 - kAlpha) * (y * y.adjoint());
    const CMat direct_inv = direct.ldlt().solve(CMat::Identity(m, m));
    worst = std::max(worst, (tracker.inverse() - direct_inv).norm() / direct_inv.norm());
  }
  std::ostringstream os;
  os << "max relative Frobenius drift " << worst << " over " << frames << " frames";
  if (worst >= 1e-6) throw Failure{os.str()};
  return os.str();
}

std::string check_remote_reconstruction() {
  Rng rng(33);
  const int m = 5, s = 2;
  const CMat basis_block = random_cmat(rng, m, s);
  RecursiveInverseTracker tracker(m, oracle_tracker_config());
  CMat remote_gram;
  CVec remote_z;
  bool have_remote = false;
  double worst = 0.0;
  for (int l = 0; l < 300; ++l) {
    const CVec y = random_cvec(rng, m);
    const bool speech = rng.uniform() < 0.3;
    auto out = tracker.advance(y, speech, basis_block);
    if (!have_remote) {
      remote_gram = tracker.gram(basis_block);
      remote_z = out.compressed;
      have_remote = true;
      continue;
    }
    if (out.payload) {
      auto rec = reconstruct_remote(remote_gram, *out.payload, kAlpha);
      remote_gram = rec.gram_next;
      remote_z = rec.compressed;
      worst = std::max(worst, (remote_gram - tracker.gram(basis_block)).norm());
      worst = std::max(worst, (remote_z - out.compressed).norm());
    }
  }
  std::ostringstream os;
  os << "max remote/local deviation " << worst;
  if (worst >= 1e-10) throw Failure{os.str()};
  return os.str();
}

std::string check_distributed_vs_centralized(int instances) {
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    Rng rng(100 + i);
    const int J = 2 + static_cast<int>(rng.below(4));
    const int S = 1 + static_cast<int>(rng.below(3));
    std::vector<int> mics;
    for (int j = 0; j < J; ++j)
      mics.push_back(std::max<int>(S, 2 + static_cast<int>(rng.below(4))));
    const NodeLayout layout(mics);
    const int bins = 2, frames = 25;
    const auto spectra = random_spectra(rng, layout, bins, frames);
    const auto basis = random_basis(rng, layout, bins, S);
    const auto vad = random_vad(rng, J, frames);

    SimulationConfig sim;
    sim.kind = BeamformerKind::DnbdLcmv;
    sim.topology = Topology::fully_connected(J);
    sim.covariance.mode = CovarianceSource::Mode::Recursive;
    sim.covariance.tracker = oracle_tracker_config();
    const auto result = run_simulation(spectra, nullptr, vad, basis, sim);

    for (int f = 0; f < bins; ++f) {
      DirectCovariance oracle(layout);
      for (int l = 0; l < frames; ++l) {
        oracle.advance(spectra, f, l, vad[0][l] != 0);
        const CMat full = oracle.stacked(layout);
        const CVec y = spectra.observation(f, l);
        for (int j = 0; j < J; ++j) {
          const CVec w = centralized_lcmv(full, basis[f], j);
          const cdouble reference = (w.adjoint() * y)(0);
          const cdouble got = result.outputs[j](f, l);
          const double err =
              std::abs(got - reference) / std::max(1.0, std::abs(reference));
          worst = std::max(worst, err);
        }
      }
    }
  }
  std::ostringstream os;
  os << "max |distributed - centralized| " << worst << " over " << instances << " instances";
  if (worst > 1e-10) throw Failure{os.str()};
  return os.str();
}

std::string check_tree_vs_fully_connected(int trees) {
  Rng rng(55);
  const int J = 6, S = 2, bins = 2, frames = 20;
  std::vector<int> mics(J, 3);
  const NodeLayout layout(mics);
  const auto spectra = random_spectra(rng, layout, bins, frames);
  const auto basis = random_basis(rng, layout, bins, S);
  const auto vad = random_vad(rng, J, frames);

  SimulationConfig sim;
  sim.kind = BeamformerKind::DnbdLcmv;
  sim.topology = Topology::fully_connected(J);
  sim.covariance.mode = CovarianceSource::Mode::Recursive;
  sim.covariance.tracker = oracle_tracker_config();
  const auto reference = run_simulation(spectra, nullptr, vad, basis, sim);

  double worst = 0.0;
  for (int t = 0; t < trees; ++t) {
    SimulationConfig tree_sim = sim;
    tree_sim.topology = Topology::random_spanning_tree(J, rng);
    const auto result = run_simulation(spectra, nullptr, vad, basis, tree_sim);
    for (int f = 0; f < bins; ++f)
      worst = std::max(worst,
                       (result.fused[f] - reference.fused[f]).cwiseAbs().maxCoeff());
  }
  std::ostringstream os;
  os << "max |tree - fully connected| " << worst << " over " << trees << " spanning trees";
  if (worst > 1e-12) throw Failure{os.str()};
  return os.str();
}

std::string check_ledger_counts(const std::vector<int>& node_counts,
                                const std::vector<int>& source_counts) {
  std::ostringstream os;
  for (int J : node_counts) {
    for (int S : source_counts) {
      Rng rng(derive_seed(7, J, S));
      const int N = 6;
      std::vector<int> mics(J, N);
      const NodeLayout layout(mics);
      const int frames = 12;
      const auto spectra = random_spectra(rng, layout, 1, frames);
      const auto basis = random_basis(rng, layout, 1, S);
      auto vad = random_vad(rng, J, frames);
      vad[0][4] = 1;  // make sure both frame kinds appear
      vad[0][5] = 0;
      for (int j = 1; j < J; ++j) vad[j] = vad[0];

      const auto rows = predict_costs(J, N, S);
      const auto expect = [&](const char* beamformer, const char* smoothing) {
        for (const auto& row : rows)
          if (row.beamformer == beamformer && row.smoothing == smoothing)
            return static_cast<std::uint64_t>(row.bandwidth_reals);
        throw Failure{"cost row missing"};
      };

      // Recursive rank-1 scheme: noise frames carry J(2S+1) reals, speech 2JS.
      {
        SimulationConfig sim;
        sim.kind = BeamformerKind::DnbdLcmv;
        sim.topology = Topology::fully_connected(J);
        sim.covariance.mode = CovarianceSource::Mode::Recursive;
        sim.covariance.tracker = oracle_tracker_config();
        const auto result = run_simulation(spectra, nullptr, vad, basis, sim);
        for (int l = 1; l < frames; ++l) {
          const std::uint64_t want =
              vad[0][l] ? static_cast<std::uint64_t>(2 * J * S)
                        : expect("dnbd-lcmv/dnbd-lcmp", "recursive");
          if (result.ledger.frame_total(l) != want) {
            std::ostringstream err;
            err << "recursive J=" << J << " S=" << S << " frame " << l << ": "
                << result.ledger.frame_total(l) << " != " << want;
            throw Failure{err.str()};
          }
        }
      }
      // Block scheme: z-only frames carry 2JS reals.
      {
        SimulationConfig sim;
        sim.kind = BeamformerKind::Dnds;
        sim.topology = Topology::fully_connected(J);
        const auto result = run_simulation(spectra, nullptr, vad, basis, sim);
        for (int l = 1; l < frames; ++l) {
          const std::uint64_t want = expect("dnds", "once");
          if (result.ledger.frame_total(l) != want) {
            std::ostringstream err;
            err << "dnds J=" << J << " S=" << S << " frame " << l << ": "
                << result.ledger.frame_total(l) << " != " << want;
            throw Failure{err.str()};
          }
        }
      }
      // Centralized baseline: raw observations, 2JN reals every frame.
      {
        SimulationConfig sim;
        sim.kind = BeamformerKind::CentralizedLcmv;
        sim.covariance.mode = CovarianceSource::Mode::Fixed;
        sim.covariance.full.assign(1, random_pd(rng, layout.num_channels()));
        const auto result = run_simulation(spectra, nullptr, {}, basis, sim);
        for (int l = 0; l < frames; ++l) {
          const std::uint64_t want = expect("lcmv/lcmp", "non-recursive");
          if (result.ledger.frame_total(l) != want) {
            std::ostringstream err;
            err << "centralized J=" << J << " S=" << S << " frame " << l << ": "
                << result.ledger.frame_total(l) << " != " << want;
            throw Failure{err.str()};
          }
        }
      }
    }
  }
  os << "ledger matches analytic counts for J in {" << node_counts.front() << ".."
     << node_counts.back() << "}, S in {" << source_counts.front() << ".."
     << source_counts.back() << "}";
  return os.str();
}

std::string check_wire_round_trip() {
  Rng rng(66);
  std::vector<WasnMessage> log;
  for (int i = 0; i < 20; ++i) {
    WasnMessage msg;
    msg.type = static_cast<MessageType>(1 + rng.below(6));
    msg.sender = static_cast<std::uint32_t>(rng.below(16));
    msg.receiver = rng.uniform() < 0.5 ? kBroadcast : static_cast<std::uint32_t>(rng.below(16));
    msg.frame = static_cast<std::uint32_t>(rng.below(1000));
    msg.bin = static_cast<std::uint32_t>(rng.below(257));
    const int s = 1 + static_cast<int>(rng.below(4));
    switch (msg.type) {
      case MessageType::CompressedZ:
      case MessageType::FusedZ:
      case MessageType::RawObservation:
        msg.z = random_cvec(rng, s);
        break;
      case MessageType::ConstraintD:
        msg.gram = random_pd(rng, s);
        break;
      case MessageType::RankOne:
        msg.rank1.projection = random_cvec(rng, s);
        msg.rank1.quad_power = rng.uniform();
        break;
      case MessageType::PartialSum:
        msg.z = random_cvec(rng, s);
        msg.has_gram = rng.uniform() < 0.5;
        if (msg.has_gram) msg.gram = random_pd(rng, s);
        break;
    }
    log.push_back(msg);
  }
  const std::string bytes = dump_message_log(log);
  const auto parsed = parse_message_log(bytes);
  if (parsed.size() != log.size()) throw Failure{"log size changed in round trip"};
  for (size_t i = 0; i < log.size(); ++i) {
    if (serialize_message(parsed[i]) != serialize_message(log[i]))
      throw Failure{"message " + std::to_string(i) + " not bit-identical"};
  }
  // Corrupted tag must fail loudly.
  std::string bad = serialize_message(log[0]);
  bad[0] = 99;
  try {
    deserialize_message(bad);
    throw Failure{"corrupted tag accepted"};
  } catch (const ParseError&) {
  }
  return "bit-identical round trip; corrupted tag rejected";
}

std::string check_hermitian_pd_preservation() {
  Rng rng(77);
  double worst_herm = 0.0, worst_eig = 1.0;
  for (int i = 0; i < 20; ++i) {
    const int m = 2 + static_cast<int>(rng.below(5));
    std::vector<CVec> frames;
    for (int l = 0; l < 3 * m; ++l) frames.push_back(random_cvec(rng, m));
    auto block = estimate_block_nonrecursive(frames, 1e-4);
    worst_herm = std::max(worst_herm, (block.matrix - block.matrix.adjoint()).norm());
    worst_eig = std::min(worst_eig, block.smallest_eigenvalue());

    HermitianBlock inv{block.matrix.ldlt().solve(CMat::Identity(m, m)), true};
    for (int l = 0; l < 50; ++l) {
      auto r = smw_update(inv, random_cvec(rng, m), random_cmat(rng, m, 2), 0.9);
      inv = r.next_inverse;
    }
    worst_herm = std::max(worst_herm, (inv.matrix - inv.matrix.adjoint()).norm());
    worst_eig = std::min(worst_eig, inv.smallest_eigenvalue());
  }
  std::ostringstream os;
  os << "max Hermitian defect " << worst_herm << ", min eigenvalue " << worst_eig;
  if (worst_herm > 1e-12 || worst_eig <= 0.0) throw Failure{os.str()};
  return os.str();
}

std::string check_constraint_satisfaction() {
  Rng rng(88);
  double worst = 0.0;
  for (int i = 0; i < 30; ++i) {
    const int S = 1 + static_cast<int>(rng.below(3));
    const int J = 2 + static_cast<int>(rng.below(3));
    std::vector<CMat> blocks;
    std::vector<int> mics;
    for (int j = 0; j < J; ++j) {
      mics.push_back(S + 1 + static_cast<int>(rng.below(3)));
      blocks.push_back(random_cmat(rng, mics.back(), S));
    }
    Vec selection = Vec::Zero(S);
    selection(0) = 1.0;
    const auto basis = build_basis(blocks, selection);
    const CMat R = random_pd(rng, basis.layout.num_channels());
    for (int j = 0; j < J; ++j) {
      const CVec w = centralized_lcmv(R, basis, j);
      worst = std::max(
          worst, ((w.adjoint() * basis.stacked).adjoint() - basis.node_gains[j]).norm());
      const CVec wd = dnds_weights(basis, j);
      worst = std::max(
          worst, ((wd.adjoint() * basis.stacked).adjoint() - basis.node_gains[j]).norm());
    }
  }
  std::ostringstream os;
  os << "max constraint violation " << worst;
  if (worst > 1e-8) throw Failure{os.str()};
  return os.str();
}

std::string check_basis_scaling_invariance() {
  Rng rng(99);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int S = 1 + static_cast<int>(rng.below(3));
    const int J = 2 + static_cast<int>(rng.below(3));
    std::vector<CMat> blocks;
    for (int j = 0; j < J; ++j)
      blocks.push_back(random_cmat(rng, S + 2, S));
    Vec selection = Vec::Ones(S);
    const auto basis = build_basis(blocks, selection);
    // Rescale every column by a random nonzero complex factor.
    CVec scale(S);
    for (int k = 0; k < S; ++k)
      scale(k) = (0.2 + rng.uniform()) * std::exp(cdouble(0, rng.uniform(0.0, 2 * M_PI)));
    std::vector<CMat> scaled_blocks;
    for (const auto& b : blocks) scaled_blocks.push_back(b * scale.asDiagonal());
    const auto scaled = build_basis(scaled_blocks, selection);

    const CMat R = random_pd(rng, basis.layout.num_channels());
    const CVec y = random_cvec(rng, basis.layout.num_channels());
    for (int j = 0; j < J; ++j) {
      const cdouble a = (centralized_lcmv(R, basis, j).adjoint() * y)(0);
      const cdouble b = (centralized_lcmv(R, scaled, j).adjoint() * y)(0);
      worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
  }
  std::ostringstream os;
  os << "max output change under column rescaling " << worst;
  if (worst > 1e-10) throw Failure{os.str()};
  return os.str();
}

std::string check_dnds_identity_reduction() {
  Rng rng(111);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int S = 1 + static_cast<int>(rng.below(3));
    const int J = 2 + static_cast<int>(rng.below(3));
    std::vector<CMat> blocks;
    std::vector<CMat> grams;
    std::vector<CVec> zs;
    std::vector<int> mics;
    for (int j = 0; j < J; ++j) {
      mics.push_back(S + 1 + static_cast<int>(rng.below(3)));
      blocks.push_back(random_cmat(rng, mics.back(), S));
    }
    Vec selection = Vec::Zero(S);
    selection(0) = 1.0;
    const auto basis = build_basis(blocks, selection);
    const CVec y = random_cvec(rng, basis.layout.num_channels());
    for (int j = 0; j < J; ++j) {
      const CMat q = basis.node_block(j);
      grams.push_back(q.adjoint() * q);
      zs.push_back(q.adjoint() * y.segment(basis.layout.offset_of(j), basis.layout.mics_at(j)));
    }
    const auto fusion = dnbd_fuse(grams, zs);
    for (int j = 0; j < J; ++j) {
      const cdouble via_fusion = node_output(fusion, basis, j);
      const cdouble via_weights = (dnds_weights(basis, j).adjoint() * y)(0);
      worst = std::max(worst, std::abs(via_fusion - via_weights));
    }
  }
  std::ostringstream os;
  os << "max |identity-covariance fusion - delay-and-sum| " << worst;
  if (worst > 1e-12) throw Failure{os.str()};
  return os.str();
}

std::string check_vad_error_model() {
  GroundTruth truth;
  truth.speech_active.assign(1000, 0);
  for (int l = 0; l < 1000; ++l) truth.speech_active[l] = (l % 3 != 0) ? 1 : 0;
  Rng rng(123);
  const auto picked = simulate_vad_error(truth, 0.05, rng);
  if (picked.size() != 50)
    throw Failure{"expected 50 frames, got " + std::to_string(picked.size())};
  for (int l : picked)
    if (!truth.speech_active[l]) throw Failure{"selected a silent frame"};
  return "5% of 1000 frames -> 50 speech-active frames";
}

}  // namespace

std::vector<CheckResult> run_verification(VerifyLevel level) {
  std::vector<std::pair<std::string, CheckFn>> checks;
  checks.emplace_back("stft-round-trip", [] { return check_stft_round_trip(); });
  checks.emplace_back("smw-vs-direct-inversion", [] { return check_smw_vs_direct(200); });
  checks.emplace_back("remote-reconstruction", [] { return check_remote_reconstruction(); });
  checks.emplace_back("distributed-vs-centralized",
                      [] { return check_distributed_vs_centralized(5); });
  checks.emplace_back("tree-vs-fully-connected", [] { return check_tree_vs_fully_connected(3); });
  checks.emplace_back("ledger-vs-analytic-counts",
                      [] { return check_ledger_counts({4}, {2}); });
  checks.emplace_back("wire-format-round-trip", [] { return check_wire_round_trip(); });

  if (level == VerifyLevel::Full) {
    checks.emplace_back("smw-long-chain", [] { return check_smw_vs_direct(1000); });
    checks.emplace_back("hermitian-pd-preservation",
                        [] { return check_hermitian_pd_preservation(); });
    checks.emplace_back("constraint-satisfaction", [] { return check_constraint_satisfaction(); });
    checks.emplace_back("basis-scaling-invariance",
                        [] { return check_basis_scaling_invariance(); });
    checks.emplace_back("dnds-identity-reduction", [] { return check_dnds_identity_reduction(); });
    checks.emplace_back("ledger-sweep", [] {
      return check_ledger_counts({2, 3, 4, 5, 6, 7, 8}, {1, 2, 3, 4});
    });
    checks.emplace_back("vad-error-model", [] { return check_vad_error_model(); });
  }

  std::vector<CheckResult> results;
  for (auto& [name, fn] : checks) {
    CheckResult r;
    r.name = name;
    try {
      r.detail = fn();
      r.passed = true;
    } catch (const Failure& f) {
      r.detail = f.detail;
      r.passed = false;
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
      r.passed = false;
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace wasn
