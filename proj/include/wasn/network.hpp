#pragma once

#include "wasn/beamformer.hpp"
#include "wasn/common.hpp"
#include "wasn/covariance.hpp"
#include "wasn/stft.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wasn {

struct Topology {
  enum class Kind { FullyConnected, Tree };
  Kind kind = Kind::FullyConnected;
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  int root = 0;  // tree only; defaults to the lowest index

  static Topology fully_connected(int num_nodes);
  static Topology tree(int num_nodes, std::vector<std::pair<int, int>> edges, int root = 0);
  /// Uniform over labeled trees (random Pruefer sequence).
  static Topology random_spanning_tree(int num_nodes, Rng& rng, int root = 0);

  std::vector<std::vector<int>> neighbor_sets() const;
  /// Tree only: parent of each node on its unique path to the root (-1 at root).
  std::vector<int> parents() const;
  void validate() const;
};

enum class MessageType : std::uint32_t {
  CompressedZ = 1,
  ConstraintD = 2,
  RankOne = 3,
  PartialSum = 4,
  FusedZ = 5,
  RawObservation = 6,
};

constexpr std::uint32_t kBroadcast = 0xffffffffu;

/// Everything that crosses a link, with a fixed little-endian wire layout.
struct WasnMessage {
  MessageType type = MessageType::CompressedZ;
  std::uint32_t sender = 0;
  std::uint32_t receiver = kBroadcast;
  std::uint32_t frame = 0;
  std::uint32_t bin = 0;

  CVec z;                 // CompressedZ / PartialSum / FusedZ / RawObservation
  CMat gram;              // ConstraintD, and PartialSum when has_gram
  bool has_gram = false;  // PartialSum only
  RankOnePayload rank1;   // RankOne

  /// Real numbers this message puts on the air (Hermitian blocks cost S^2).
  std::uint64_t payload_reals() const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

std::string serialize_message(const WasnMessage& msg);
WasnMessage deserialize_message(const std::string& bytes);

/// Length-prefixed concatenation of serialized messages.
std::string dump_message_log(const std::vector<WasnMessage>& log);
std::vector<WasnMessage> parse_message_log(const std::string& bytes);

/// Per-(node, frame) transmission accounting in units of one real number.
class TransmissionLedger {
 public:
  TransmissionLedger() = default;
  explicit TransmissionLedger(int num_nodes) : num_nodes_(num_nodes) {}

  void record(const WasnMessage& msg);

  int num_nodes() const { return num_nodes_; }
  int num_frames() const { return static_cast<int>(frames_.size()); }
  std::uint64_t reals(int node, int frame) const;
  std::uint64_t frame_total(int frame) const;
  std::uint64_t total_reals() const;
  std::uint64_t messages_of_type(MessageType t) const;
  std::uint64_t messages_of_type_in_frame(MessageType t, int frame) const;

  static TransmissionLedger replay(const std::vector<WasnMessage>& log, int num_nodes);
  bool operator==(const TransmissionLedger& other) const;

 private:
  struct Cell {
    std::uint64_t reals = 0;
    std::array<std::uint32_t, 7> by_type{};
  };
  int num_nodes_ = 0;
  std::vector<std::vector<Cell>> frames_;  // [frame][node]
};

struct CostRow {
  std::string beamformer;
  std::string smoothing;  // "non-recursive", "recursive", or "once"
  std::string complexity;
  double complexity_value = 0.0;
  std::string bandwidth;
  double bandwidth_reals = 0.0;
  bool ledger_checkable = false;
};

/// Analytic per-bin complexity and bandwidth table, all rows, including the
/// prior-work baselines that exist here only as count formulas.
std::vector<CostRow> predict_costs(int num_nodes, int mics_per_node, int num_sources,
                                   int max_iterations = 1, int block_frames = 100);

enum class BeamformerKind { CentralizedLcmv, CentralizedLcmp, DnbdLcmv, DnbdLcmp, Dnds };

bool is_centralized(BeamformerKind k);
bool is_power_minimizing(BeamformerKind k);  // LCMP variants: no VAD dependency
std::string to_string(BeamformerKind k);
BeamformerKind beamformer_from_string(const std::string& name);

struct CovarianceSource {
  enum class Mode { Fixed, NonRecursive, Recursive };
  Mode mode = Mode::Fixed;
  /// Fixed mode: per-bin per-node blocks (distributed kinds)...
  std::vector<std::vector<HermitianBlock>> node_blocks;
  /// ...or per-bin full covariance (centralized kinds).
  std::vector<CMat> full;
  int block_frames = 100;
  TrackerConfig tracker;
  double diagonal_loading = -1.0;
};

struct SimulationConfig {
  BeamformerKind kind = BeamformerKind::DnbdLcmv;
  Topology topology;
  CovarianceSource covariance;
  bool log_messages = false;
  bool compute_shadow = false;
  double loss_probability = 0.0;  // any simulated loss aborts the frame
  std::uint64_t loss_seed = 0;
};

struct SimulationResult {
  std::vector<CMat> outputs;         // per node: bins x frames
  std::vector<CMat> shadow_outputs;  // per node: bins x frames
  std::vector<CMat> fused;           // per bin: S x frames (node 0's view)
  TransmissionLedger ledger;
  std::vector<WasnMessage> log;
  double max_fusion_disagreement = 0.0;  // across nodes, per frame
  long pseudo_inverse_events = 0;
};

/// Run one beamformer over all bins and frames of a rendered signal,
/// simulating the message layer with exact transmission accounting.
SimulationResult run_simulation(const SpectralFrames& noisy, const SpectralFrames* shadow,
                                const std::vector<std::vector<std::uint8_t>>& vad,
                                const std::vector<ConstraintBasis>& basis_per_bin,
                                const SimulationConfig& cfg);

}  // namespace wasn
