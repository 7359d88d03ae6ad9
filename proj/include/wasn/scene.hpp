#pragma once

#include "wasn/common.hpp"
#include "wasn/stft.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace wasn {

struct RoomSpec {
  Vec3 dimensions{5.0, 5.0, 3.0};
  double t60_s = 0.0;  // 0 = anechoic
  double speed_of_sound = kSpeedOfSound;

  bool contains(const Vec3& p) const {
    return (p.array() > 0.0).all() && (p.array() < dimensions.array()).all();
  }
  void validate() const;
};

struct NodePlacement {
  std::vector<Vec3> mic_positions;
};

struct NoiseSource {
  Vec3 position;
  double snr_db = 10.0;  // relative to the calibration speaker at node 1's reference mic
};

struct SceneSpec {
  RoomSpec room;
  std::vector<NodePlacement> nodes;
  std::vector<Vec3> speakers;
  std::vector<NoiseSource> noise_sources;
  double sensor_noise_snr_db = 30.0;
  std::vector<double> training_radii_m;
  std::uint64_t seed = 1;
  AnalysisConfig stft;
  int rir_max_order = -1;  // -1: bounded by the t60 truncation horizon

  NodeLayout layout() const;
  int num_speakers() const { return static_cast<int>(speakers.size()); }
  int num_nodes() const { return static_cast<int>(nodes.size()); }
  std::vector<Vec3> all_mics() const;
  void validate() const;
};

struct GroundTruth {
  std::vector<std::vector<std::uint8_t>> vad;             // [node][frame]
  std::vector<std::uint8_t> speech_active;                // [frame], any speaker
  std::vector<std::vector<std::uint8_t>> speaker_active;  // [speaker][frame]
  Mat tdoa_seconds;                                       // nodes x speakers

  int num_frames() const { return static_cast<int>(speech_active.size()); }
};

struct RenderedScene {
  int sample_rate_hz = 8000;
  Mat mixture;                      // samples x channels
  std::vector<Mat> speaker_images;  // per speaker, samples x channels
  Mat noise_image;                  // directional noises summed
  Mat sensor_noise;
  double sensor_sigma = 0.0;
  GroundTruth truth;
};

/// Image-method room impulse response. Fractional delays use an 8-tap
/// Hann-windowed sinc; reflections are truncated at the t60 horizon, below
/// which image energy has decayed past -60 dB.
Vec generate_rir(const RoomSpec& room, const Vec3& source, const Vec3& mic, int sample_rate_hz,
                 int max_order = -1);

/// Transfer function of an impulse response sampled at the analysis bins.
CVec atf_from_rir(const Vec& rir, const AnalysisConfig& cfg);

/// Per-bin, per-node steering blocks (M_j x S) for sources at `positions`.
std::vector<std::vector<CMat>> steering_blocks(const RoomSpec& room,
                                               const std::vector<NodePlacement>& nodes,
                                               const std::vector<Vec3>& positions,
                                               const AnalysisConfig& cfg, int max_order = -1);

/// Convolve sources into microphone images, calibrate noise levels against the
/// first speaker at node 1's reference microphone, and add sensor noise.
RenderedScene render_scene(const SceneSpec& spec, const std::vector<Vec>& speech,
                           const std::vector<Vec>& noise);

/// Draw one training position per speaker, uniform on the sphere of the given
/// radius, resampling until the point falls inside the room.
std::vector<Vec3> perturb_training_positions(const SceneSpec& spec,
                                             const std::vector<double>& radii, Rng& rng);

/// Spatial coherence of an ideal diffuse field: sinc(2 pi f d / c).
double diffuse_coherence(double freq_hz, double distance_m, double speed_of_sound = kSpeedOfSound);

/// Frames misclassified as noise-only: a fraction R of the horizon, drawn
/// uniformly from speech-active frames. Returns sorted frame indices.
std::vector<int> simulate_vad_error(const GroundTruth& truth, double fraction, Rng& rng);

/// Superposition of plane waves from quasi-uniform directions; approximates an
/// isotropic diffuse field at the given microphone positions.
Mat synthesize_diffuse_field(const std::vector<Vec3>& mic_positions, double seconds,
                             int sample_rate_hz, int num_directions, std::uint64_t seed);

/// Bursty, low-pass shaped surrogate for speech recordings.
Vec synthesize_speech_like(double seconds, int sample_rate_hz, std::uint64_t seed);
/// Stationary noise with the same long-term shaping.
Vec synthesize_speech_shaped_noise(double seconds, int sample_rate_hz, std::uint64_t seed);

Mat white_noise(long samples, int channels, double sigma, std::uint64_t seed);

/// Speaker activity flags from the dry signals under the scene's framing:
/// a frame is active when its energy exceeds the long-term mean minus 40 dB.
std::vector<std::vector<std::uint8_t>> speaker_activity(const std::vector<Vec>& speech,
                                                        const AnalysisConfig& cfg);

/// The default four-node experiment room (nodes centered on each wall, 30 cm
/// out, 1.5 m high; six-mic linear arrays at 3 cm spacing).
SceneSpec default_scene(double t60_s);

SceneSpec load_scene(const std::string& path);
std::string scene_to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const std::string& text);

}  // namespace wasn
