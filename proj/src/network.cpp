#include "wasn/network.hpp"

#include <algorithm>
#include <cstring>
#include <memory>
#include <queue>

namespace wasn {

// ---------------------------------------------------------------------------
// Topology

Topology Topology::fully_connected(int num_nodes) {
  Topology t;
  t.kind = Kind::FullyConnected;
  t.num_nodes = num_nodes;
  for (int a = 0; a < num_nodes; ++a)
    for (int b = a + 1; b < num_nodes; ++b) t.edges.emplace_back(a, b);
  t.validate();
  return t;
}

Topology Topology::tree(int num_nodes, std::vector<std::pair<int, int>> edges, int root) {
  Topology t;
  t.kind = Kind::Tree;
  t.num_nodes = num_nodes;
  t.edges = std::move(edges);
  t.root = root;
  t.validate();
  return t;
}

Topology Topology::random_spanning_tree(int num_nodes, Rng& rng, int root) {
  if (num_nodes == 1) return tree(1, {}, 0);
  if (num_nodes == 2) return tree(2, {{0, 1}}, root);
  // Decode a random Pruefer sequence.
  std::vector<int> seq(num_nodes - 2);
  for (auto& v : seq) v = static_cast<int>(rng.below(num_nodes));
  std::vector<int> degree(num_nodes, 1);
  for (int v : seq) ++degree[v];
  std::priority_queue<int, std::vector<int>, std::greater<>> leaves;
  for (int v = 0; v < num_nodes; ++v)
    if (degree[v] == 1) leaves.push(v);
  std::vector<std::pair<int, int>> edges;
  for (int v : seq) {
    const int leaf = leaves.top();
    leaves.pop();
    edges.emplace_back(std::min(leaf, v), std::max(leaf, v));
    if (--degree[v] == 1) leaves.push(v);
  }
  const int a = leaves.top();
  leaves.pop();
  const int b = leaves.top();
  edges.emplace_back(std::min(a, b), std::max(a, b));
  return tree(num_nodes, std::move(edges), root);
}

std::vector<std::vector<int>> Topology::neighbor_sets() const {
  std::vector<std::vector<int>> nb(num_nodes);
  for (const auto& [a, b] : edges) {
    nb[a].push_back(b);
    nb[b].push_back(a);
  }
  for (auto& v : nb) std::sort(v.begin(), v.end());
  return nb;
}

void Topology::validate() const {
  if (num_nodes < 1) throw std::invalid_argument("topology needs at least one node");
  for (const auto& [a, b] : edges)
    if (a < 0 || b < 0 || a >= num_nodes || b >= num_nodes || a == b)
      throw std::invalid_argument("invalid edge");
  const size_t expected = kind == Kind::Tree
                              ? static_cast<size_t>(num_nodes - 1)
                              : static_cast<size_t>(num_nodes) * (num_nodes - 1) / 2;
  if (edges.size() != expected)
    throw std::invalid_argument(kind == Kind::Tree ? "tree must have exactly J-1 edges"
                                                   : "fully connected graph has J(J-1)/2 edges");
  if (kind == Kind::Tree && (root < 0 || root >= num_nodes))
    throw std::invalid_argument("tree root out of range");
  // Connectivity.
  const auto nb = neighbor_sets();
  std::vector<char> seen(num_nodes, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int reached = 0;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    ++reached;
    for (int w : nb[v])
      if (!seen[w]) {
        seen[w] = 1;
        q.push(w);
      }
  }
  if (reached != num_nodes) throw std::invalid_argument("topology is disconnected");
}

std::vector<int> Topology::parents() const {
  if (kind != Kind::Tree) throw std::logic_error("parents() requires a tree");
  const auto nb = neighbor_sets();
  std::vector<int> parent(num_nodes, -2);
  std::queue<int> q;
  q.push(root);
  parent[root] = -1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : nb[v])
      if (parent[w] == -2) {
        parent[w] = v;
        q.push(w);
      }
  }
  return parent;
}

// ---------------------------------------------------------------------------
// Messages and wire format

std::uint64_t WasnMessage::payload_reals() const {
  const auto s = static_cast<std::uint64_t>(z.size());
  switch (type) {
    case MessageType::CompressedZ:
    case MessageType::FusedZ:
    case MessageType::RawObservation:
      return 2 * s;
    case MessageType::ConstraintD:
      return static_cast<std::uint64_t>(gram.rows()) * gram.rows();
    case MessageType::RankOne:
      return 2 * static_cast<std::uint64_t>(rank1.projection.size()) + 1;
    case MessageType::PartialSum:
      return 2 * s + (has_gram ? static_cast<std::uint64_t>(gram.rows()) * gram.rows() : 0);
  }
  return 0;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

void put_cvec(std::string& out, const CVec& v) {
  for (int i = 0; i < v.size(); ++i) {
    put_f64(out, v(i).real());
    put_f64(out, v(i).imag());
  }
}

// Lower triangle, row by row: off-diagonal complex entries then the real diagonal.
void put_hermitian(std::string& out, const CMat& m) {
  for (int i = 0; i < m.rows(); ++i) {
    for (int k = 0; k < i; ++k) {
      put_f64(out, m(i, k).real());
      put_f64(out, m(i, k).imag());
    }
    put_f64(out, m(i, i).real());
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4, "truncated message buffer");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i)
      v = (v << 8) | static_cast<unsigned char>(bytes_[pos_ + i]);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8, "truncated message buffer");
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i)
      bits = (bits << 8) | static_cast<unsigned char>(bytes_[pos_ + i]);
    pos_ += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  CVec cvec(int n) {
    CVec v(n);
    for (int i = 0; i < n; ++i) {
      const double re = f64();
      v(i) = {re, f64()};
    }
    return v;
  }

  CMat hermitian(int n) {
    CMat m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < i; ++k) {
        const double re = f64();
        m(i, k) = {re, f64()};
        m(k, i) = std::conj(m(i, k));
      }
      m(i, i) = f64();
    }
    return m;
  }

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) throw ParseError(what, pos_);
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_message(const WasnMessage& msg) {
  std::string out;
  put_u32(out, static_cast<std::uint32_t>(msg.type));
  put_u32(out, msg.sender);
  put_u32(out, msg.receiver);
  put_u32(out, msg.frame);
  put_u32(out, msg.bin);
  std::uint32_t dim = 0;
  switch (msg.type) {
    case MessageType::CompressedZ:
    case MessageType::FusedZ:
    case MessageType::RawObservation:
    case MessageType::PartialSum:
      dim = static_cast<std::uint32_t>(msg.z.size());
      break;
    case MessageType::ConstraintD:
      dim = static_cast<std::uint32_t>(msg.gram.rows());
      break;
    case MessageType::RankOne:
      dim = static_cast<std::uint32_t>(msg.rank1.projection.size());
      break;
  }
  put_u32(out, dim);
  put_u32(out, msg.has_gram ? 1u : 0u);
  switch (msg.type) {
    case MessageType::CompressedZ:
    case MessageType::FusedZ:
    case MessageType::RawObservation:
      put_cvec(out, msg.z);
      break;
    case MessageType::ConstraintD:
      put_hermitian(out, msg.gram);
      break;
    case MessageType::RankOne:
      put_cvec(out, msg.rank1.projection);
      put_f64(out, msg.rank1.quad_power);
      break;
    case MessageType::PartialSum:
      put_cvec(out, msg.z);
      if (msg.has_gram) put_hermitian(out, msg.gram);
      break;
  }
  return out;
}

WasnMessage deserialize_message(const std::string& bytes) {
  Reader r(bytes);
  WasnMessage msg;
  const std::uint32_t tag = r.u32();
  if (tag < 1 || tag > 6) throw ParseError("bad message tag", 0);
  msg.type = static_cast<MessageType>(tag);
  msg.sender = r.u32();
  msg.receiver = r.u32();
  msg.frame = r.u32();
  msg.bin = r.u32();
  const int dim = static_cast<int>(r.u32());
  msg.has_gram = r.u32() != 0;
  switch (msg.type) {
    case MessageType::CompressedZ:
    case MessageType::FusedZ:
    case MessageType::RawObservation:
      msg.z = r.cvec(dim);
      break;
    case MessageType::ConstraintD:
      msg.gram = r.hermitian(dim);
      break;
    case MessageType::RankOne:
      msg.rank1.projection = r.cvec(dim);
      msg.rank1.quad_power = r.f64();
      break;
    case MessageType::PartialSum:
      msg.z = r.cvec(dim);
      if (msg.has_gram) msg.gram = r.hermitian(dim);
      break;
  }
  if (!r.done()) throw ParseError("trailing bytes after message", r.pos());
  return msg;
}

std::string dump_message_log(const std::vector<WasnMessage>& log) {
  std::string out;
  for (const auto& msg : log) {
    const std::string rec = serialize_message(msg);
    put_u32(out, static_cast<std::uint32_t>(rec.size()));
    out += rec;
  }
  return out;
}

std::vector<WasnMessage> parse_message_log(const std::string& bytes) {
  std::vector<WasnMessage> log;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    if (pos + 4 > bytes.size()) throw ParseError("truncated log record header", pos);
    std::uint32_t len = 0;
    for (int i = 3; i >= 0; --i)
      len = (len << 8) | static_cast<unsigned char>(bytes[pos + i]);
    pos += 4;
    if (pos + len > bytes.size()) throw ParseError("truncated log record", pos);
    log.push_back(deserialize_message(bytes.substr(pos, len)));
    pos += len;
  }
  return log;
}

// ---------------------------------------------------------------------------
// Ledger

void TransmissionLedger::record(const WasnMessage& msg) {
  const int frame = static_cast<int>(msg.frame);
  if (frame >= static_cast<int>(frames_.size()))
    frames_.resize(frame + 1, std::vector<Cell>(num_nodes_));
  auto& cell = frames_[frame].at(msg.sender);
  cell.reals += msg.payload_reals();
  ++cell.by_type[static_cast<int>(msg.type)];
}

std::uint64_t TransmissionLedger::reals(int node, int frame) const {
  if (frame < 0 || frame >= num_frames()) return 0;
  return frames_[frame].at(node).reals;
}

std::uint64_t TransmissionLedger::frame_total(int frame) const {
  if (frame < 0 || frame >= num_frames()) return 0;
  std::uint64_t acc = 0;
  for (const auto& c : frames_[frame]) acc += c.reals;
  return acc;
}

std::uint64_t TransmissionLedger::total_reals() const {
  std::uint64_t acc = 0;
  for (int l = 0; l < num_frames(); ++l) acc += frame_total(l);
  return acc;
}

std::uint64_t TransmissionLedger::messages_of_type(MessageType t) const {
  std::uint64_t acc = 0;
  for (int l = 0; l < num_frames(); ++l) acc += messages_of_type_in_frame(t, l);
  return acc;
}

std::uint64_t TransmissionLedger::messages_of_type_in_frame(MessageType t, int frame) const {
  if (frame < 0 || frame >= num_frames()) return 0;
  std::uint64_t acc = 0;
  for (const auto& c : frames_[frame]) acc += c.by_type[static_cast<int>(t)];
  return acc;
}

TransmissionLedger TransmissionLedger::replay(const std::vector<WasnMessage>& log,
                                              int num_nodes) {
  TransmissionLedger ledger(num_nodes);
  for (const auto& msg : log) ledger.record(msg);
  return ledger;
}

bool TransmissionLedger::operator==(const TransmissionLedger& other) const {
  if (num_nodes_ != other.num_nodes_ || frames_.size() != other.frames_.size()) return false;
  for (size_t l = 0; l < frames_.size(); ++l)
    for (int j = 0; j < num_nodes_; ++j)
      if (frames_[l][j].reals != other.frames_[l][j].reals ||
          frames_[l][j].by_type != other.frames_[l][j].by_type)
        return false;
  return true;
}

// ---------------------------------------------------------------------------
// Analytic costs (per frequency bin)

std::vector<CostRow> predict_costs(int num_nodes, int mics_per_node, int num_sources,
                                   int max_iterations, int block_frames) {
  if (num_nodes < 1 || mics_per_node < 1 || num_sources < 1 || max_iterations < 1 ||
      block_frames < 1)
    throw std::invalid_argument("cost parameters must be positive");
  const double J = num_nodes, N = mics_per_node, S = num_sources, T = max_iterations;
  const double JN3 = std::pow(J * N, 3.0);
  const double danse3 = std::pow(N + (J - 1) * S, 3.0);
  const double N3 = std::pow(N, 3.0);
  const double S3 = std::pow(S, 3.0);
  const std::string per_block = "/|L_y|";
  std::vector<CostRow> rows;
  rows.push_back({"lcmv/lcmp", "non-recursive", "O((JN)^3)" + per_block, JN3, "2JN", 2 * J * N, true});
  rows.push_back(
      {"lc-danse", "non-recursive", "O((N+(J-1)S)^3)" + per_block, danse3, "2JS", 2 * J * S, false});
  rows.push_back({"bd-lcmv/bd-lcmp", "non-recursive", "O(N^3)" + per_block, N3, "2JS", 2 * J * S,
                  false});
  rows.push_back(
      {"dnbd-lcmv/dnbd-lcmp", "non-recursive", "O(S^3)" + per_block, S3, "2JS", 2 * J * S, true});
  rows.push_back({"dnds", "once", "O(S^3) once", S3, "2JS", 2 * J * S, true});
  rows.push_back({"lcmv/lcmp", "recursive", "O((JN)^3)", JN3, "2JN", 2 * J * N, true});
  rows.push_back({"bd-lcmv/bd-lcmp", "recursive", "O(N^3)", N3, "2JS*t_max*(S+1)",
                  2 * J * S * T * (S + 1), false});
  rows.push_back(
      {"dnbd-lcmv/dnbd-lcmp", "recursive", "O(S^3)", S3, "J(2S+1)", J * (2 * S + 1), true});
  return rows;
}

// ---------------------------------------------------------------------------
// Simulation

bool is_centralized(BeamformerKind k) {
  return k == BeamformerKind::CentralizedLcmv || k == BeamformerKind::CentralizedLcmp;
}

bool is_power_minimizing(BeamformerKind k) {
  return k == BeamformerKind::CentralizedLcmp || k == BeamformerKind::DnbdLcmp;
}

std::string to_string(BeamformerKind k) {
  switch (k) {
    case BeamformerKind::CentralizedLcmv: return "lcmv";
    case BeamformerKind::CentralizedLcmp: return "lcmp";
    case BeamformerKind::DnbdLcmv: return "dnbd-lcmv";
    case BeamformerKind::DnbdLcmp: return "dnbd-lcmp";
    case BeamformerKind::Dnds: return "dnds";
  }
  return "?";
}

BeamformerKind beamformer_from_string(const std::string& name) {
  if (name == "lcmv") return BeamformerKind::CentralizedLcmv;
  if (name == "lcmp") return BeamformerKind::CentralizedLcmp;
  if (name == "dnbd-lcmv") return BeamformerKind::DnbdLcmv;
  if (name == "dnbd-lcmp") return BeamformerKind::DnbdLcmp;
  if (name == "dnds") return BeamformerKind::Dnds;
  throw std::invalid_argument("unknown beamformer: " + name);
}

namespace {

struct LocalFrame {
  CVec z;
  CMat gram;
  std::optional<RankOnePayload> rank1;
  bool broadcast_gram = false;
  CVec shadow_z;
};

// Per-(node, bin) producer of compressed signals and gram blocks.
class NodeProcessor {
 public:
  NodeProcessor(const SimulationConfig& cfg, int node, int bin, const SpectralFrames& noisy,
                const SpectralFrames* shadow, const std::vector<std::vector<std::uint8_t>>& vad,
                const ConstraintBasis& basis)
      : cfg_(cfg),
        node_(node),
        bin_(bin),
        noisy_(noisy),
        shadow_(shadow),
        vad_(vad),
        basis_block_(basis.node_block(node)) {
    const auto mode = cfg.covariance.mode;
    if (cfg.kind == BeamformerKind::Dnds) {
      compressor_ = basis_block_.adjoint();
      gram_ = hermitize(basis_block_.adjoint() * basis_block_);
    } else if (mode == CovarianceSource::Mode::Fixed) {
      set_block(cfg.covariance.node_blocks.at(bin).at(node).matrix);
    } else if (mode == CovarianceSource::Mode::Recursive) {
      TrackerConfig tc = cfg.covariance.tracker;
      tracker_ = std::make_unique<RecursiveInverseTracker>(basis_block_.rows(), tc);
    }
  }

  LocalFrame process(int frame) {
    LocalFrame lf;
    const CVec y = noisy_.node_observation(node_, bin_, frame);

    if (cfg_.kind == BeamformerKind::Dnds) {
      lf.broadcast_gram = frame == 0;
    } else if (cfg_.covariance.mode == CovarianceSource::Mode::Fixed) {
      lf.broadcast_gram = frame == 0;
    } else if (cfg_.covariance.mode == CovarianceSource::Mode::NonRecursive) {
      const int B = cfg_.covariance.block_frames;
      if (frame % B == 0) {
        estimate_block(frame, std::min(frame + B, noisy_.num_frames()));
        lf.broadcast_gram = true;
      }
    }

    if (tracker_) {
      const bool update = updates_this_frame(frame);
      auto out = tracker_->advance(y, !update, basis_block_);
      lf.z = std::move(out.compressed);
      lf.rank1 = std::move(out.payload);
      lf.gram = tracker_->gram(basis_block_);
      lf.broadcast_gram = out.reseeded || frame == 0;
      if (lf.broadcast_gram) lf.rank1.reset();  // full block rides instead
      if (shadow_) lf.shadow_z = tracker_->compress(shadow_->node_observation(node_, bin_, frame),
                                                    basis_block_);
    } else {
      lf.z = compressor_ * y;
      lf.gram = gram_;
      if (shadow_) lf.shadow_z = compressor_ * shadow_->node_observation(node_, bin_, frame);
    }
    return lf;
  }

 private:
  static CMat hermitize(const CMat& a) { return 0.5 * (a + a.adjoint()); }

  bool updates_this_frame(int frame) const {
    if (cfg_.kind == BeamformerKind::Dnds) return false;
    if (is_power_minimizing(cfg_.kind)) return true;  // noisy covariance, no VAD
    return !vad_.at(node_).at(frame);
  }

  void set_block(const CMat& cov) {
    Eigen::LDLT<CMat> ldlt(cov);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("covariance block is not factorizable");
    compressor_ = ldlt.solve(basis_block_).adjoint();  // Q^H Delta^{-1}
    gram_ = hermitize(compressor_ * basis_block_);
  }

  void estimate_block(int first, int last) {
    std::vector<CVec> frames;
    for (int l = first; l < last; ++l)
      if (updates_this_frame(l)) frames.push_back(noisy_.node_observation(node_, bin_, l));
    if (frames.empty()) {
      if (compressor_.size() != 0) return;  // keep previous estimate
      // Nothing observed yet: fall back to a scaled-identity floor.
      const CVec y0 = noisy_.node_observation(node_, bin_, first);
      const double eps0 =
          std::max(1e-12, 1e-3 * y0.squaredNorm() / static_cast<double>(y0.size()));
      set_block(eps0 * CMat::Identity(y0.size(), y0.size()));
      return;
    }
    set_block(estimate_block_nonrecursive(frames, cfg_.covariance.diagonal_loading).matrix);
  }

  const SimulationConfig& cfg_;
  int node_, bin_;
  const SpectralFrames& noisy_;
  const SpectralFrames* shadow_;
  const std::vector<std::vector<std::uint8_t>>& vad_;
  CMat basis_block_;
  CMat compressor_;  // S x M_j, applies Q^H Delta^{-1}
  CMat gram_;
  std::unique_ptr<RecursiveInverseTracker> tracker_;
};

class Emitter {
 public:
  Emitter(SimulationResult& result, const SimulationConfig& cfg, int bin)
      : result_(result), cfg_(cfg), bin_(bin), loss_rng_(derive_seed(cfg.loss_seed, 0x105e, bin)) {}

  void send(WasnMessage msg, int frame) {
    msg.frame = static_cast<std::uint32_t>(frame);
    msg.bin = static_cast<std::uint32_t>(bin_);
    if (cfg_.loss_probability > 0.0 && loss_rng_.uniform() < cfg_.loss_probability)
      throw std::runtime_error("incomplete fusion: message from node " +
                               std::to_string(msg.sender) + " lost in frame " +
                               std::to_string(frame));
    result_.ledger.record(msg);
    if (cfg_.log_messages) result_.log.push_back(std::move(msg));
  }

 private:
  SimulationResult& result_;
  const SimulationConfig& cfg_;
  int bin_;
  Rng loss_rng_;
};

double alpha_of(const SimulationConfig& cfg) { return cfg.covariance.tracker.forgetting; }

// Fully connected operation cycle for one bin: broadcast, reconstruct, fuse.
void run_bin_fully_connected(const SimulationConfig& cfg, int bin, const SpectralFrames& noisy,
                             const SpectralFrames* shadow,
                             const std::vector<std::vector<std::uint8_t>>& vad,
                             const ConstraintBasis& basis, SimulationResult& result) {
  const int J = basis.layout.num_nodes();
  const int frames = noisy.num_frames();
  std::vector<NodeProcessor> procs;
  procs.reserve(J);
  for (int j = 0; j < J; ++j) procs.emplace_back(cfg, j, bin, noisy, shadow, vad, basis);

  // Receiver-side caches: view[r][q] is node r's belief about node q.
  std::vector<std::vector<CMat>> gram_view(J, std::vector<CMat>(J));
  std::vector<std::vector<CVec>> z_view(J, std::vector<CVec>(J));

  Emitter emitter(result, cfg, bin);
  std::vector<LocalFrame> locals(J);
  const int S = basis.num_sources();

  for (int l = 0; l < frames; ++l) {
    for (int j = 0; j < J; ++j) locals[j] = procs[static_cast<size_t>(j)].process(l);

    // A single node has no links; everything below is inter-node traffic.
    for (int j = 0; J > 1 && j < J; ++j) {
      const auto& lf = locals[j];
      if (lf.rank1) {
        WasnMessage msg;
        msg.type = MessageType::RankOne;
        msg.sender = static_cast<std::uint32_t>(j);
        msg.rank1 = *lf.rank1;
        emitter.send(msg, l);
        for (int r = 0; r < J; ++r) {
          if (r == j) continue;
          auto rec = reconstruct_remote(gram_view[r][j], *lf.rank1, alpha_of(cfg));
          gram_view[r][j] = std::move(rec.gram_next);
          z_view[r][j] = std::move(rec.compressed);
        }
        continue;
      }
      if (lf.broadcast_gram) {
        WasnMessage msg;
        msg.type = MessageType::ConstraintD;
        msg.sender = static_cast<std::uint32_t>(j);
        msg.gram = lf.gram;
        emitter.send(msg, l);
        for (int r = 0; r < J; ++r)
          if (r != j) gram_view[r][j] = lf.gram;
      }
      WasnMessage msg;
      msg.type = MessageType::CompressedZ;
      msg.sender = static_cast<std::uint32_t>(j);
      msg.z = lf.z;
      emitter.send(msg, l);
      for (int r = 0; r < J; ++r)
        if (r != j) z_view[r][j] = lf.z;
    }

    // Every node fuses its own view; they must all agree.
    CVec fused0;
    for (int r = 0; r < J; ++r) {
      FusionState st;
      st.gram = CMat::Zero(S, S);
      st.compressed = CVec::Zero(S);
      for (int j = 0; j < J; ++j) {
        st.gram += (j == r) ? locals[j].gram : gram_view[r][j];
        st.compressed += (j == r) ? locals[j].z : z_view[r][j];
      }
      solve_fusion(st);
      if (st.used_pseudo_inverse) ++result.pseudo_inverse_events;
      if (r == 0) {
        fused0 = st.fused;
        result.fused[bin].col(l) = st.fused;
        if (shadow) {
          CVec sh = CVec::Zero(S);
          for (int j = 0; j < J; ++j) sh += locals[j].shadow_z;
          FusionState shst = st;
          shst.compressed = sh;
          solve_fusion(shst);
          for (int out = 0; out < J; ++out)
            result.shadow_outputs[out](bin, l) =
                (basis.node_gains[out].adjoint() * shst.fused)(0);
        }
      } else {
        const double diff = (st.fused - fused0).cwiseAbs().maxCoeff();
        result.max_fusion_disagreement = std::max(result.max_fusion_disagreement, diff);
      }
      result.outputs[r](bin, l) = (basis.node_gains[r].adjoint() * st.fused)(0);
    }
  }
}

// Tree data-driven flow: leaves fire first, partial sums climb to the root,
// the fused vector floods back down.
void run_bin_tree(const SimulationConfig& cfg, int bin, const SpectralFrames& noisy,
                  const SpectralFrames* shadow,
                  const std::vector<std::vector<std::uint8_t>>& vad,
                  const ConstraintBasis& basis, SimulationResult& result) {
  const int J = basis.layout.num_nodes();
  const int frames = noisy.num_frames();
  const int S = basis.num_sources();
  const auto parent = cfg.topology.parents();

  std::vector<std::vector<int>> children(J);
  for (int j = 0; j < J; ++j)
    if (parent[j] >= 0) children[parent[j]].push_back(j);
  std::vector<int> depth(J, 0);
  // Parents come from a BFS, so depths can be filled in one pass over parents.
  {
    std::queue<int> q;
    q.push(cfg.topology.root);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int c : children[v]) {
        depth[c] = depth[v] + 1;
        q.push(c);
      }
    }
  }
  std::vector<int> upward_order(J);
  for (int j = 0; j < J; ++j) upward_order[j] = j;
  std::sort(upward_order.begin(), upward_order.end(), [&](int a, int b) {
    if (depth[a] != depth[b]) return depth[a] > depth[b];
    return a < b;
  });

  std::vector<NodeProcessor> procs;
  procs.reserve(J);
  for (int j = 0; j < J; ++j) procs.emplace_back(cfg, j, bin, noisy, shadow, vad, basis);

  // Parent-side caches of each child's latest subtree sums.
  std::vector<CMat> child_gram(J, CMat::Zero(S, S));
  std::vector<CVec> child_z(J, CVec::Zero(S));

  Emitter emitter(result, cfg, bin);
  std::vector<LocalFrame> locals(J);
  std::vector<char> gram_dirty(J, 0);

  for (int l = 0; l < frames; ++l) {
    for (int j = 0; j < J; ++j) locals[j] = procs[static_cast<size_t>(j)].process(l);

    // Upward pass, children strictly before parents.
    std::fill(gram_dirty.begin(), gram_dirty.end(), 0);
    for (int j : upward_order) {
      if (j == cfg.topology.root) continue;
      const auto& lf = locals[j];
      const bool leaf = children[j].empty();

      bool subtree_gram_dirty = lf.broadcast_gram || lf.rank1.has_value();
      for (int c : children[j]) subtree_gram_dirty = subtree_gram_dirty || gram_dirty[c];

      if (leaf && lf.rank1 && !lf.broadcast_gram) {
        WasnMessage msg;
        msg.type = MessageType::RankOne;
        msg.sender = static_cast<std::uint32_t>(j);
        msg.receiver = static_cast<std::uint32_t>(parent[j]);
        msg.rank1 = *lf.rank1;
        emitter.send(msg, l);
        auto rec = reconstruct_remote(child_gram[j], *lf.rank1, alpha_of(cfg));
        child_gram[j] = std::move(rec.gram_next);
        child_z[j] = std::move(rec.compressed);
        gram_dirty[j] = 1;
        continue;
      }

      CVec zsum = lf.z;
      CMat gsum = lf.gram;
      for (int c : children[j]) {
        zsum += child_z[c];
        gsum += child_gram[c];
      }
      WasnMessage msg;
      msg.type = MessageType::PartialSum;
      msg.sender = static_cast<std::uint32_t>(j);
      msg.receiver = static_cast<std::uint32_t>(parent[j]);
      msg.z = zsum;
      msg.has_gram = subtree_gram_dirty;
      if (msg.has_gram) msg.gram = gsum;
      emitter.send(msg, l);
      child_z[j] = zsum;
      if (subtree_gram_dirty) child_gram[j] = gsum;
      gram_dirty[j] = subtree_gram_dirty ? 1 : 0;
    }

    // Root fuses and floods the result back down.
    const int root = cfg.topology.root;
    FusionState st;
    st.gram = locals[root].gram;
    st.compressed = locals[root].z;
    for (int c : children[root]) {
      st.gram += child_gram[c];
      st.compressed += child_z[c];
    }
    solve_fusion(st);
    if (st.used_pseudo_inverse) ++result.pseudo_inverse_events;
    result.fused[bin].col(l) = st.fused;

    for (int j = 0; j < J; ++j) {
      if (children[j].empty()) continue;  // leaves only receive the flood
      WasnMessage msg;
      msg.type = MessageType::FusedZ;
      msg.sender = static_cast<std::uint32_t>(j);
      msg.z = st.fused;
      emitter.send(msg, l);
    }

    for (int j = 0; j < J; ++j)
      result.outputs[j](bin, l) = (basis.node_gains[j].adjoint() * st.fused)(0);
    if (shadow) {
      CVec sh = CVec::Zero(S);
      for (int j = 0; j < J; ++j) sh += locals[j].shadow_z;
      FusionState shst = st;
      shst.compressed = sh;
      solve_fusion(shst);
      for (int j = 0; j < J; ++j)
        result.shadow_outputs[j](bin, l) = (basis.node_gains[j].adjoint() * shst.fused)(0);
    }
  }
}

void run_bin_centralized(const SimulationConfig& cfg, int bin, const SpectralFrames& noisy,
                         const SpectralFrames* shadow, const ConstraintBasis& basis,
                         SimulationResult& result) {
  const int J = basis.layout.num_nodes();
  const int frames = noisy.num_frames();
  std::vector<CVec> weights(J);
  for (int j = 0; j < J; ++j)
    weights[j] = centralized_lcmv(cfg.covariance.full.at(bin), basis, j);

  Emitter emitter(result, cfg, bin);
  for (int l = 0; l < frames; ++l) {
    for (int j = 0; j < J; ++j) {
      WasnMessage msg;
      msg.type = MessageType::RawObservation;
      msg.sender = static_cast<std::uint32_t>(j);
      msg.z = noisy.node_observation(j, bin, l);
      emitter.send(msg, l);
    }
    const CVec y = noisy.observation(bin, l);
    for (int j = 0; j < J; ++j) result.outputs[j](bin, l) = (weights[j].adjoint() * y)(0);
    if (shadow) {
      const CVec n = shadow->observation(bin, l);
      for (int j = 0; j < J; ++j)
        result.shadow_outputs[j](bin, l) = (weights[j].adjoint() * n)(0);
    }
  }
}

}  // namespace

SimulationResult run_simulation(const SpectralFrames& noisy, const SpectralFrames* shadow,
                                const std::vector<std::vector<std::uint8_t>>& vad,
                                const std::vector<ConstraintBasis>& basis_per_bin,
                                const SimulationConfig& cfg) {
  const int bins = noisy.num_bins();
  const int frames = noisy.num_frames();
  const int J = noisy.layout.num_nodes();
  if (static_cast<int>(basis_per_bin.size()) != bins)
    throw std::invalid_argument("need one constraint basis per bin");
  if (!is_centralized(cfg.kind) && cfg.topology.num_nodes != J)
    throw std::invalid_argument("topology node count does not match layout");
  if (shadow && (shadow->num_frames() != frames || shadow->num_bins() != bins))
    throw std::invalid_argument("shadow stream shape mismatch");
  if (!is_power_minimizing(cfg.kind) && cfg.kind != BeamformerKind::Dnds &&
      cfg.covariance.mode != CovarianceSource::Mode::Fixed) {
    if (static_cast<int>(vad.size()) != J)
      throw std::invalid_argument("need VAD flags per node");
    for (const auto& flags : vad)
      if (static_cast<int>(flags.size()) != frames)
        throw std::invalid_argument("VAD flag count does not match frames");
  }

  const int S = basis_per_bin.empty() ? 0 : basis_per_bin.front().num_sources();
  SimulationResult result;
  result.ledger = TransmissionLedger(J);
  result.outputs.assign(J, CMat::Zero(bins, frames));
  if (shadow) result.shadow_outputs.assign(J, CMat::Zero(bins, frames));
  result.fused.assign(bins, CMat::Zero(S, frames));

  for (int bin = 0; bin < bins; ++bin) {
    if (is_centralized(cfg.kind)) {
      run_bin_centralized(cfg, bin, noisy, shadow, basis_per_bin[bin], result);
    } else if (cfg.topology.kind == Topology::Kind::Tree) {
      run_bin_tree(cfg, bin, noisy, shadow, vad, basis_per_bin[bin], result);
    } else {
      run_bin_fully_connected(cfg, bin, noisy, shadow, vad, basis_per_bin[bin], result);
    }
  }
  return result;
}

}  // namespace wasn
