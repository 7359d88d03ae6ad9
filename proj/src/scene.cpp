#include "wasn/scene.hpp"

#include "wasn/dsp.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace wasn {

using nlohmann::json;

NodeLayout SceneSpec::layout() const {
  std::vector<int> mics;
  mics.reserve(nodes.size());
  for (const auto& n : nodes) mics.push_back(static_cast<int>(n.mic_positions.size()));
  return NodeLayout(mics);
}

std::vector<Vec3> SceneSpec::all_mics() const {
  std::vector<Vec3> out;
  for (const auto& n : nodes)
    out.insert(out.end(), n.mic_positions.begin(), n.mic_positions.end());
  return out;
}

void SceneSpec::validate() const {
  room.validate();
  stft.validate();
  if (nodes.empty()) throw std::invalid_argument("scene needs at least one node");
  if (speakers.empty()) throw std::invalid_argument("scene needs at least one speaker");
  for (const auto& n : nodes) {
    if (n.mic_positions.empty()) throw std::invalid_argument("node without microphones");
    for (const auto& p : n.mic_positions)
      if (!room.contains(p)) throw std::invalid_argument("microphone outside room");
  }
  for (const auto& p : speakers)
    if (!room.contains(p)) throw std::invalid_argument("speaker outside room");
  for (const auto& v : noise_sources)
    if (!room.contains(v.position)) throw std::invalid_argument("noise source outside room");
  if (!training_radii_m.empty() && training_radii_m.size() != speakers.size())
    throw std::invalid_argument("training radii must match speaker count");
  for (double r : training_radii_m)
    if (r < 0.0) throw std::invalid_argument("training radius must be non-negative");
}

std::vector<std::vector<std::uint8_t>> speaker_activity(const std::vector<Vec>& speech,
                                                        const AnalysisConfig& cfg) {
  std::vector<std::vector<std::uint8_t>> active(speech.size());
  for (size_t s = 0; s < speech.size(); ++s) {
    const int frames = cfg.num_frames(speech[s].size());
    active[s].assign(frames, 0);
    if (frames == 0) continue;
    Vec energy(frames);
    for (int l = 0; l < frames; ++l)
      energy(l) = speech[s].segment(static_cast<long>(l) * cfg.hop_length, cfg.frame_length)
                      .squaredNorm();
    const double mean = energy.mean();
    if (mean <= 0.0) continue;
    const double threshold = mean * 1e-4;  // long-term average minus 40 dB
    for (int l = 0; l < frames; ++l) active[s][l] = energy(l) > threshold ? 1 : 0;
  }
  return active;
}

namespace {

Mat convolve_into(const Vec& dry, const std::vector<Vec>& rirs, long samples) {
  Mat image = Mat::Zero(samples, static_cast<int>(rirs.size()));
  for (size_t m = 0; m < rirs.size(); ++m) {
    const Vec full = fft_convolve(dry, rirs[m]);
    const long n = std::min<long>(samples, full.size());
    image.col(static_cast<int>(m)).head(n) = full.head(n);
  }
  return image;
}

double masked_power(const Eigen::Ref<const Vec>& x, const std::vector<std::uint8_t>& frame_mask,
                    const AnalysisConfig& cfg) {
  double acc = 0.0;
  long count = 0;
  for (size_t l = 0; l < frame_mask.size(); ++l) {
    if (!frame_mask[l]) continue;
    acc += x.segment(static_cast<long>(l) * cfg.hop_length, cfg.frame_length).squaredNorm();
    count += cfg.frame_length;
  }
  if (count == 0) return mean_power(x);
  return acc / static_cast<double>(count);
}

}  // namespace

RenderedScene render_scene(const SceneSpec& spec, const std::vector<Vec>& speech,
                           const std::vector<Vec>& noise) {
  spec.validate();
  if (static_cast<int>(speech.size()) != spec.num_speakers())
    throw std::invalid_argument("speech signal count does not match speakers");
  if (noise.size() != spec.noise_sources.size())
    throw std::invalid_argument("noise signal count does not match noise sources");
  long samples = -1;
  for (const auto& x : speech) {
    if (samples < 0) samples = x.size();
    if (x.size() != samples) throw std::invalid_argument("length mismatch");
  }
  for (const auto& x : noise)
    if (x.size() != samples) throw std::invalid_argument("length mismatch");
  if (samples <= 0) throw std::invalid_argument("empty input signals");

  const auto mics = spec.all_mics();
  const int channels = static_cast<int>(mics.size());
  const int fs = spec.stft.sample_rate_hz;

  // Speakers carry equal power at the source.
  std::vector<Vec> dry = speech;
  const double p0 = mean_power(dry[0]);
  for (auto& x : dry) {
    const double p = mean_power(x);
    if (p > 0.0 && p0 > 0.0) x *= std::sqrt(p0 / p);
  }

  RenderedScene out;
  out.sample_rate_hz = fs;
  out.truth.speaker_active = speaker_activity(dry, spec.stft);

  out.speaker_images.resize(spec.num_speakers());
  for (int s = 0; s < spec.num_speakers(); ++s) {
    std::vector<Vec> rirs;
    rirs.reserve(channels);
    for (const auto& mic : mics)
      rirs.push_back(generate_rir(spec.room, spec.speakers[s], mic, fs, spec.rir_max_order));
    out.speaker_images[s] = convolve_into(dry[s], rirs, samples);
  }

  // Calibration reference: speaker 1's image at node 1's first microphone,
  // measured over that speaker's active frames.
  const double ref_power =
      masked_power(out.speaker_images[0].col(0), out.truth.speaker_active[0], spec.stft);

  out.noise_image = Mat::Zero(samples, channels);
  for (size_t v = 0; v < spec.noise_sources.size(); ++v) {
    std::vector<Vec> rirs;
    rirs.reserve(channels);
    for (const auto& mic : mics)
      rirs.push_back(
          generate_rir(spec.room, spec.noise_sources[v].position, mic, fs, spec.rir_max_order));
    Mat image = convolve_into(noise[v], rirs, samples);
    const double p = mean_power(image.col(0));
    if (p > 0.0) {
      const double target =
          (ref_power > 0.0 ? ref_power : 1.0) * power_from_db(-spec.noise_sources[v].snr_db);
      image *= std::sqrt(target / p);
    }
    out.noise_image += image;
  }

  // Sensor noise floor relative to the superimposed speech at the same mic.
  Vec superimposed = Vec::Zero(samples);
  for (const auto& img : out.speaker_images) superimposed += img.col(0);
  const double speech_power = mean_power(superimposed);
  const double sensor_ref = speech_power > 0.0 ? speech_power : 1.0;
  out.sensor_sigma = std::sqrt(sensor_ref * power_from_db(-spec.sensor_noise_snr_db));
  out.sensor_noise = white_noise(samples, channels, out.sensor_sigma, derive_seed(spec.seed, 0x5e));

  out.mixture = out.noise_image + out.sensor_noise;
  for (const auto& img : out.speaker_images) out.mixture += img;

  const int frames = spec.stft.num_frames(samples);
  out.truth.speech_active.assign(frames, 0);
  for (int l = 0; l < frames; ++l)
    for (const auto& sa : out.truth.speaker_active)
      if (l < static_cast<int>(sa.size()) && sa[l]) out.truth.speech_active[l] = 1;
  out.truth.vad.assign(spec.num_nodes(), out.truth.speech_active);

  out.truth.tdoa_seconds.resize(spec.num_nodes(), spec.num_speakers());
  for (int j = 0; j < spec.num_nodes(); ++j) {
    for (int s = 0; s < spec.num_speakers(); ++s) {
      const double dj = (spec.nodes[j].mic_positions[0] - spec.speakers[s]).norm();
      const double d1 = (spec.nodes[0].mic_positions[0] - spec.speakers[s]).norm();
      out.truth.tdoa_seconds(j, s) = (dj - d1) / spec.room.speed_of_sound;
    }
  }
  return out;
}

std::vector<Vec3> perturb_training_positions(const SceneSpec& spec,
                                             const std::vector<double>& radii, Rng& rng) {
  if (radii.size() != spec.speakers.size())
    throw std::invalid_argument("one radius per speaker required");
  std::vector<Vec3> out;
  out.reserve(radii.size());
  for (size_t s = 0; s < radii.size(); ++s) {
    const double r = radii[s];
    if (r < 0.0) throw std::invalid_argument("radius must be non-negative");
    if (r == 0.0) {
      out.push_back(spec.speakers[s]);
      continue;
    }
    bool placed = false;
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const Vec3 candidate = spec.speakers[s] + r * rng.unit_sphere();
      if (spec.room.contains(candidate)) {
        out.push_back(candidate);
        placed = true;
        break;
      }
    }
    if (!placed) throw std::runtime_error("no in-room training position at this radius");
  }
  return out;
}

double diffuse_coherence(double freq_hz, double distance_m, double speed_of_sound) {
  const double x = 2.0 * M_PI * freq_hz * distance_m / speed_of_sound;
  return x == 0.0 ? 1.0 : std::sin(x) / x;
}

std::vector<int> simulate_vad_error(const GroundTruth& truth, double fraction, Rng& rng) {
  if (fraction < 0.0) throw std::invalid_argument("fraction must be non-negative");
  const int total = truth.num_frames();
  std::vector<int> speech_frames;
  for (int l = 0; l < total; ++l)
    if (truth.speech_active[l]) speech_frames.push_back(l);
  const int want = static_cast<int>(std::lround(fraction * total));
  if (want > static_cast<int>(speech_frames.size()))
    throw std::invalid_argument("requested VAD error exceeds available speech frames");
  // Partial Fisher-Yates; the first `want` entries become the draw.
  for (int i = 0; i < want; ++i) {
    const int j = i + static_cast<int>(rng.below(speech_frames.size() - i));
    std::swap(speech_frames[i], speech_frames[j]);
  }
  std::vector<int> out(speech_frames.begin(), speech_frames.begin() + want);
  std::sort(out.begin(), out.end());
  return out;
}

Mat synthesize_diffuse_field(const std::vector<Vec3>& mic_positions, double seconds,
                             int sample_rate_hz, int num_directions, std::uint64_t seed) {
  const long samples = static_cast<long>(seconds * sample_rate_hz);
  const int channels = static_cast<int>(mic_positions.size());
  Mat field = Mat::Zero(samples, channels);

  double max_extent = 0.0;
  for (const auto& p : mic_positions) max_extent = std::max(max_extent, p.norm());
  const long margin = static_cast<long>(std::ceil(max_extent / kSpeedOfSound * sample_rate_hz)) + 8;

  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  const double amp = 1.0 / std::sqrt(static_cast<double>(num_directions));
  Vec noise(samples + 2 * margin);
  for (int d = 0; d < num_directions; ++d) {
    // Fibonacci-sphere direction.
    const double z = 1.0 - 2.0 * (d + 0.5) / num_directions;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * d;
    const Vec3 dir{rho * std::cos(phi), rho * std::sin(phi), z};

    Rng rng(derive_seed(seed, 0xd1f, static_cast<std::uint64_t>(d)));
    for (long t = 0; t < noise.size(); ++t) noise(t) = rng.gaussian();

    for (int m = 0; m < channels; ++m) {
      // Plane-wave arrival offset for this microphone, kept causal by margin.
      const double delay = margin + dir.dot(mic_positions[m]) / kSpeedOfSound * sample_rate_hz;
      const long n0 = static_cast<long>(std::floor(delay)) - 3;
      const double frac = delay - std::floor(delay);
      double taps[8];
      for (int n = 0; n < 8; ++n) {
        const double t = (n - 3.0) - frac;
        const double w = 0.5 * (1.0 + std::cos(2.0 * M_PI * t / 8.0));
        taps[n] = w * (t == 0.0 ? 1.0 : std::sin(M_PI * t) / (M_PI * t));
      }
      for (long t = 0; t < samples; ++t) {
        double acc = 0.0;
        for (int n = 0; n < 8; ++n) acc += taps[n] * noise(t - (n0 + n) + 2 * margin);
        field(t, m) += amp * acc;
      }
    }
  }
  return field;
}

Vec synthesize_speech_like(double seconds, int sample_rate_hz, std::uint64_t seed) {
  const long samples = static_cast<long>(seconds * sample_rate_hz);
  Rng rng(derive_seed(seed, 0x5bee));
  Vec out = Vec::Zero(samples);

  // Low-pass shaped excitation with a little broadband left in.
  const double pole = std::exp(-2.0 * M_PI * 450.0 / sample_rate_hz);
  double lp = 0.0;

  const long ramp = static_cast<long>(0.025 * sample_rate_hz);
  long t = 0;
  while (t < samples) {
    const long burst = static_cast<long>(rng.uniform(0.35, 1.0) * sample_rate_hz);
    const long pause = static_cast<long>(rng.uniform(0.15, 0.45) * sample_rate_hz);
    const double syllable_hz = rng.uniform(2.5, 4.5);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (long n = 0; n < burst && t + n < samples; ++n) {
      const double g = rng.gaussian();
      lp = (1.0 - pole) * g + pole * lp;
      double env = 1.0;
      if (n < ramp) env = 0.5 - 0.5 * std::cos(M_PI * n / ramp);
      if (burst - n < ramp) env = std::min(env, 0.5 - 0.5 * std::cos(M_PI * (burst - n) / ramp));
      const double am =
          0.55 + 0.45 * std::sin(2.0 * M_PI * syllable_hz * (t + n) / sample_rate_hz + phase);
      out(t + n) = env * am * (lp + 0.08 * g);
    }
    t += burst + pause;
  }
  const double p = mean_power(out);
  if (p > 0.0) out /= std::sqrt(p);
  return out;
}

Vec synthesize_speech_shaped_noise(double seconds, int sample_rate_hz, std::uint64_t seed) {
  const long samples = static_cast<long>(seconds * sample_rate_hz);
  Rng rng(derive_seed(seed, 0xb0b1e));
  Vec out(samples);
  const double pole = std::exp(-2.0 * M_PI * 450.0 / sample_rate_hz);
  double lp = 0.0;
  for (long t = 0; t < samples; ++t) {
    const double g = rng.gaussian();
    lp = (1.0 - pole) * g + pole * lp;
    out(t) = lp + 0.08 * g;
  }
  const double p = mean_power(out);
  if (p > 0.0) out /= std::sqrt(p);
  return out;
}

Mat white_noise(long samples, int channels, double sigma, std::uint64_t seed) {
  Mat out(samples, channels);
  for (int c = 0; c < channels; ++c) {
    Rng rng(derive_seed(seed, 0x7a11, static_cast<std::uint64_t>(c)));
    for (long t = 0; t < samples; ++t) out(t, c) = sigma * rng.gaussian();
  }
  return out;
}

SceneSpec default_scene(double t60_s) {
  SceneSpec spec;
  spec.room.dimensions = Vec3{5.0, 5.0, 3.0};
  spec.room.t60_s = t60_s;
  spec.stft = AnalysisConfig{};

  const double h = 1.5;
  const double wall = 0.30;
  const std::vector<double> offsets{-0.075, -0.045, -0.015, 0.015, 0.045, 0.075};
  auto linear_array = [&](int axis, double fixed) {
    NodePlacement node;
    for (double d : offsets) {
      if (axis == 0)
        node.mic_positions.push_back(Vec3{2.5 + d, fixed, h});
      else
        node.mic_positions.push_back(Vec3{fixed, 2.5 + d, h});
    }
    return node;
  };
  spec.nodes = {linear_array(0, wall), linear_array(1, 5.0 - wall), linear_array(0, 5.0 - wall),
                linear_array(1, wall)};

  spec.speakers = {Vec3{2.00, 3.10, h}, Vec3{3.10, 2.00, h}};
  spec.noise_sources = {{Vec3{1.45, 1.45, h}, 10.0}, {Vec3{3.55, 3.55, h}, 10.0}};
  spec.sensor_noise_snr_db = 30.0;
  spec.training_radii_m = {0.0, 0.0};
  spec.seed = 1;
  return spec;
}

namespace {

Vec3 vec3_from_json(const json& a) {
  if (!a.is_array() || a.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return Vec3{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

json vec3_to_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

}  // namespace

std::string scene_to_json(const SceneSpec& spec) {
  json j;
  j["room"] = {{"dimensions", vec3_to_json(spec.room.dimensions)},
               {"t60_s", spec.room.t60_s},
               {"speed_of_sound", spec.room.speed_of_sound}};
  j["sample_rate_hz"] = spec.stft.sample_rate_hz;
  j["stft"] = {{"frame_length", spec.stft.frame_length},
               {"hop_length", spec.stft.hop_length},
               {"window", spec.stft.window == Window::Hann ? "hann" : "rect"}};
  j["nodes"] = json::array();
  for (const auto& n : spec.nodes) {
    json mics = json::array();
    for (const auto& p : n.mic_positions) mics.push_back(vec3_to_json(p));
    j["nodes"].push_back({{"mics", mics}});
  }
  j["speakers"] = json::array();
  for (const auto& p : spec.speakers) j["speakers"].push_back(vec3_to_json(p));
  j["noise_sources"] = json::array();
  for (const auto& v : spec.noise_sources)
    j["noise_sources"].push_back({{"position", vec3_to_json(v.position)}, {"snr_db", v.snr_db}});
  j["sensor_noise_snr_db"] = spec.sensor_noise_snr_db;
  j["training_radii_m"] = spec.training_radii_m;
  j["seed"] = spec.seed;
  j["rir_max_order"] = spec.rir_max_order;
  return j.dump(2);
}

SceneSpec scene_from_json(const std::string& text) {
  const json j = json::parse(text);
  SceneSpec spec;
  spec.room.dimensions = vec3_from_json(j.at("room").at("dimensions"));
  spec.room.t60_s = j.at("room").value("t60_s", 0.0);
  spec.room.speed_of_sound = j.at("room").value("speed_of_sound", kSpeedOfSound);
  spec.stft.sample_rate_hz = j.value("sample_rate_hz", 8000);
  if (j.contains("stft")) {
    spec.stft.frame_length = j["stft"].value("frame_length", 512);
    spec.stft.hop_length = j["stft"].value("hop_length", 256);
    const std::string w = j["stft"].value("window", "hann");
    spec.stft.window = w == "rect" ? Window::Rect : Window::Hann;
  }
  for (const auto& n : j.at("nodes")) {
    NodePlacement node;
    for (const auto& p : n.at("mics")) node.mic_positions.push_back(vec3_from_json(p));
    spec.nodes.push_back(std::move(node));
  }
  for (const auto& p : j.at("speakers")) spec.speakers.push_back(vec3_from_json(p));
  if (j.contains("noise_sources"))
    for (const auto& v : j["noise_sources"])
      spec.noise_sources.push_back({vec3_from_json(v.at("position")), v.value("snr_db", 10.0)});
  spec.sensor_noise_snr_db = j.value("sensor_noise_snr_db", 30.0);
  if (j.contains("training_radii_m"))
    spec.training_radii_m = j["training_radii_m"].get<std::vector<double>>();
  spec.seed = j.value("seed", std::uint64_t{1});
  spec.rir_max_order = j.value("rir_max_order", -1);
  spec.validate();
  return spec;
}

SceneSpec load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return scene_from_json(text);
}

}  // namespace wasn
