#include "wasn/experiment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace wasn {

using nlohmann::json;

void ExperimentSpec::validate() const {
  scene.validate();
  if (beamformers.empty()) throw std::invalid_argument("no beamformers requested");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (signal_seconds <= 0.0) throw std::invalid_argument("signal length must be positive");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (target_speaker < 0 || target_speaker >= scene.num_speakers())
    throw std::invalid_argument("target speaker out of range");
  for (double r : radius_sweep_m)
    if (r < 0.0) throw std::invalid_argument("radius must be non-negative");
  for (double v : vad_error_sweep)
    if (v < 0.0) throw std::invalid_argument("VAD error must be non-negative");
  for (double t : t60_sweep_s)
    if (t < 0.0) throw std::invalid_argument("t60 must be non-negative");
}

std::uint64_t ExperimentSpec::config_hash() const { return fnv1a(experiment_to_json(*this)); }

std::string experiment_to_json(const ExperimentSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["scene"] = json::parse(scene_to_json(spec.scene));
  json bf = json::array();
  for (auto k : spec.beamformers) bf.push_back(to_string(k));
  j["beamformers"] = bf;
  j["radius_sweep_m"] = spec.radius_sweep_m;
  j["vad_error_sweep"] = spec.vad_error_sweep;
  j["t60_sweep_s"] = spec.t60_sweep_s;
  j["repetitions"] = spec.repetitions;
  j["seed"] = spec.seed;
  j["signal_seconds"] = spec.signal_seconds;
  j["output_dir"] = spec.output_dir;
  j["workers"] = spec.workers;
  j["target_speaker"] = spec.target_speaker;
  return j.dump(2);
}

ExperimentSpec experiment_from_json(const std::string& text, const std::string& config_dir) {
  const json j = json::parse(text);
  ExperimentSpec spec;
  spec.name = j.value("name", "experiment");
  if (j.contains("scene")) {
    if (j["scene"].is_string()) {
      std::string ref = j["scene"].get<std::string>();
      if (ref.rfind("builtin:", 0) == 0) {
        spec.scene = default_scene(0.3);
      } else {
        if (!config_dir.empty() && !std::filesystem::path(ref).is_absolute())
          ref = (std::filesystem::path(config_dir) / ref).string();
        spec.scene = load_scene(ref);
      }
    } else {
      spec.scene = scene_from_json(j["scene"].dump());
    }
  }
  if (j.contains("beamformers")) {
    spec.beamformers.clear();
    for (const auto& name : j["beamformers"])
      spec.beamformers.push_back(beamformer_from_string(name.get<std::string>()));
  }
  if (j.contains("radius_sweep_m"))
    spec.radius_sweep_m = j["radius_sweep_m"].get<std::vector<double>>();
  if (j.contains("vad_error_sweep"))
    spec.vad_error_sweep = j["vad_error_sweep"].get<std::vector<double>>();
  if (j.contains("t60_sweep_s")) spec.t60_sweep_s = j["t60_sweep_s"].get<std::vector<double>>();
  spec.repetitions = j.value("repetitions", 10);
  spec.seed = j.value("seed", std::uint64_t{1});
  spec.signal_seconds = j.value("signal_seconds", 10.0);
  spec.output_dir = j.value("output_dir", "out");
  spec.workers = j.value("workers", 1);
  spec.target_speaker = j.value("target_speaker", 0);
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment spec: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return experiment_from_json(text, std::filesystem::path(path).parent_path().string());
}

PreparedScene prepare_scene(const ExperimentSpec& spec, double t60_s) {
  PreparedScene out;
  out.scene = spec.scene;
  out.scene.room.t60_s = t60_s;

  const int fs = out.scene.stft.sample_rate_hz;
  std::vector<Vec> speech;
  for (int s = 0; s < out.scene.num_speakers(); ++s)
    speech.push_back(
        synthesize_speech_like(spec.signal_seconds, fs, derive_seed(spec.seed, 0x9595, s)));
  std::vector<Vec> noise;
  for (size_t v = 0; v < out.scene.noise_sources.size(); ++v)
    noise.push_back(
        synthesize_speech_shaped_noise(spec.signal_seconds, fs, derive_seed(spec.seed, 0xb0b, v)));

  out.render = render_scene(out.scene, speech, noise);

  out.selection = Vec::Zero(out.scene.num_speakers());
  out.selection(spec.target_speaker) = 1.0;

  const long samples = out.render.mixture.rows();
  const int channels = static_cast<int>(out.render.mixture.cols());
  out.speech_image_sum = Mat::Zero(samples, channels);
  out.competing_image_sum = Mat::Zero(samples, channels);
  for (int s = 0; s < out.scene.num_speakers(); ++s) {
    out.speech_image_sum += out.render.speaker_images[s];
    if (out.selection(s) == 0.0) out.competing_image_sum += out.render.speaker_images[s];
  }
  return out;
}

namespace {

std::vector<std::vector<HermitianBlock>> estimate_node_blocks(const SpectralFrames& noisy,
                                                              const SpectralFrames& covnoise,
                                                              const std::vector<int>& misdetected,
                                                              bool use_noisy_everywhere) {
  const int bins = noisy.num_bins();
  const int frames = noisy.num_frames();
  const int J = noisy.layout.num_nodes();
  std::vector<std::vector<HermitianBlock>> blocks(bins);
  for (int f = 0; f < bins; ++f) {
    blocks[f].reserve(J);
    for (int j = 0; j < J; ++j) {
      std::vector<CVec> noisy_frames, noise_frames;
      noisy_frames.reserve(frames);
      for (int l = 0; l < frames; ++l) noisy_frames.push_back(noisy.node_observation(j, f, l));
      if (use_noisy_everywhere) {
        blocks[f].push_back(estimate_block_nonrecursive(noisy_frames));
        continue;
      }
      noise_frames.reserve(frames);
      for (int l = 0; l < frames; ++l)
        noise_frames.push_back(covnoise.node_observation(j, f, l));
      blocks[f].push_back(
          estimate_block_entire_horizon(noisy_frames, noise_frames, misdetected));
    }
  }
  return blocks;
}

std::vector<CMat> estimate_full(const SpectralFrames& noisy, const SpectralFrames& covnoise,
                                const std::vector<int>& misdetected, bool use_noisy_everywhere) {
  const int bins = noisy.num_bins();
  const int frames = noisy.num_frames();
  std::vector<CMat> full(bins);
  for (int f = 0; f < bins; ++f) {
    std::vector<CVec> noisy_frames, noise_frames;
    noisy_frames.reserve(frames);
    for (int l = 0; l < frames; ++l) noisy_frames.push_back(noisy.observation(f, l));
    if (use_noisy_everywhere) {
      full[f] = estimate_block_nonrecursive(noisy_frames).matrix;
      continue;
    }
    noise_frames.reserve(frames);
    for (int l = 0; l < frames; ++l) noise_frames.push_back(covnoise.observation(f, l));
    full[f] = estimate_block_entire_horizon(noisy_frames, noise_frames, misdetected).matrix;
  }
  return full;
}

}  // namespace

std::map<BeamformerKind, EvalResult> run_single(const ExperimentSpec& spec,
                                                const PreparedScene& prepared, double radius_m,
                                                double vad_error, std::uint64_t rep_seed) {
  const auto& scene = prepared.scene;
  const auto& render = prepared.render;
  const auto cfg = scene.stft;
  const int fs = cfg.sample_rate_hz;
  const long samples = render.mixture.rows();
  const int channels = static_cast<int>(render.mixture.cols());
  const auto layout = scene.layout();
  const int J = layout.num_nodes();

  Rng rng(rep_seed);

  // Fresh training positions, reverberant training steering, constraint basis.
  const std::vector<double> radii(scene.speakers.size(), radius_m);
  const auto training = perturb_training_positions(scene, radii, rng);
  const auto blocks = steering_blocks(scene.room, scene.nodes, training, cfg, scene.rir_max_order);
  std::vector<ConstraintBasis> basis;
  basis.reserve(blocks.size());
  for (const auto& per_node : blocks) basis.push_back(build_basis(per_node, prepared.selection));

  // Fresh microphone self-noise; same source signals and images.
  const Mat sensor =
      white_noise(samples, channels, render.sensor_sigma, derive_seed(rep_seed, 0x5e11));
  const Mat mixture = prepared.speech_image_sum + render.noise_image + sensor;
  const Mat cov_noise = render.noise_image + sensor;  // the model's noise term
  const Mat shadow = prepared.competing_image_sum + cov_noise;  // metric noise incl. competing speech

  const auto misdetected = simulate_vad_error(render.truth, vad_error, rng);

  const SpectralFrames Y = analyze(mixture, cfg, layout);
  const SpectralFrames Ncov = analyze(cov_noise, cfg, layout);
  const SpectralFrames Nshadow = analyze(shadow, cfg, layout);

  bool need_blocks_lcmv = false, need_blocks_lcmp = false;
  bool need_full_lcmv = false, need_full_lcmp = false;
  for (auto k : spec.beamformers) {
    need_blocks_lcmv |= k == BeamformerKind::DnbdLcmv;
    need_blocks_lcmp |= k == BeamformerKind::DnbdLcmp;
    need_full_lcmv |= k == BeamformerKind::CentralizedLcmv;
    need_full_lcmp |= k == BeamformerKind::CentralizedLcmp;
  }
  std::vector<std::vector<HermitianBlock>> blocks_lcmv, blocks_lcmp;
  std::vector<CMat> full_lcmv, full_lcmp;
  if (need_blocks_lcmv) blocks_lcmv = estimate_node_blocks(Y, Ncov, misdetected, false);
  if (need_blocks_lcmp) blocks_lcmp = estimate_node_blocks(Y, Ncov, misdetected, true);
  if (need_full_lcmv) full_lcmv = estimate_full(Y, Ncov, misdetected, false);
  if (need_full_lcmp) full_lcmp = estimate_full(Y, Ncov, misdetected, true);

  const int max_lag = static_cast<int>(scene.room.dimensions.norm() / scene.room.speed_of_sound *
                                       fs) + 32;

  std::map<BeamformerKind, EvalResult> results;
  for (auto kind : spec.beamformers) {
    SimulationConfig sim;
    sim.kind = kind;
    sim.topology = Topology::fully_connected(J);
    sim.compute_shadow = true;
    sim.covariance.mode = CovarianceSource::Mode::Fixed;
    switch (kind) {
      case BeamformerKind::DnbdLcmv: sim.covariance.node_blocks = blocks_lcmv; break;
      case BeamformerKind::DnbdLcmp: sim.covariance.node_blocks = blocks_lcmp; break;
      case BeamformerKind::CentralizedLcmv: sim.covariance.full = full_lcmv; break;
      case BeamformerKind::CentralizedLcmp: sim.covariance.full = full_lcmp; break;
      case BeamformerKind::Dnds: break;
    }

    const auto out = run_simulation(Y, &Nshadow, render.truth.vad, basis, sim);

    EvalResult eval;
    eval.seed = rep_seed;
    eval.tx_reals_total = out.ledger.total_reals();
    std::vector<Vec> node_outputs(J);
    for (int j = 0; j < J; ++j) {
      node_outputs[j] = synthesize_single(out.outputs[j], cfg);
      const Vec noise_part = synthesize_single(out.shadow_outputs[j], cfg);
      eval.snr_db.push_back(snr(node_outputs[j], noise_part));
    }
    std::vector<double> est, theo;
    for (int j = 1; j < J; ++j) {
      est.push_back(gcc_phat_tdoa(node_outputs[0], node_outputs[j], max_lag, fs));
      theo.push_back(render.truth.tdoa_seconds(j, spec.target_speaker));
      eval.tdoa_error_s.push_back(std::abs(theo.back() - est.back()));
    }
    if (J >= 2) eval.ate_s = ate(est, theo);
    results[kind] = std::move(eval);
  }
  return results;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("need paired samples");
  const auto ranks = [](const std::vector<double>& v) {
    const int n = static_cast<int>(v.size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    int i = 0;
    while (i < n) {
      int j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (i + j) + 1.0;  // average rank for ties
      for (int k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const int n = static_cast<int>(x.size());
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

namespace {

struct Task {
  int point_index;
  double t60, radius, vad_error;
  int rep;
};

void emit_rows(std::vector<CsvRow>& rows, const ExperimentSpec& spec, const Task& task,
               BeamformerKind kind, const EvalResult& eval, std::uint64_t hash) {
  CsvRow base;
  base.setup = spec.name;
  base.t60_s = task.t60;
  base.radius_m = task.radius;
  base.vad_error = task.vad_error;
  base.beamformer = to_string(kind);
  base.rep = std::to_string(task.rep);
  base.seed = eval.seed;
  base.config_hash = hash;

  double snr_sum = 0.0;
  for (size_t j = 0; j < eval.snr_db.size(); ++j) {
    CsvRow row = base;
    row.node = static_cast<int>(j);
    row.metric = "snr_db";
    row.value = eval.snr_db[j];
    rows.push_back(row);
    snr_sum += eval.snr_db[j];
  }
  CsvRow agg = base;
  agg.node = -1;
  agg.metric = "snr_db";
  agg.value = snr_sum / std::max<size_t>(1, eval.snr_db.size());
  rows.push_back(agg);

  for (size_t j = 0; j < eval.tdoa_error_s.size(); ++j) {
    CsvRow row = base;
    row.node = static_cast<int>(j + 1);
    row.metric = "tdoa_error_s";
    row.value = eval.tdoa_error_s[j];
    rows.push_back(row);
  }
  if (!eval.tdoa_error_s.empty()) {
    CsvRow row = base;
    row.node = -1;
    row.metric = "ate_s";
    row.value = eval.ate_s;
    rows.push_back(row);
  }
  CsvRow tx = base;
  tx.node = -1;
  tx.metric = "tx_reals_total";
  tx.value = static_cast<double>(eval.tx_reals_total);
  rows.push_back(tx);
}

bool row_order(const CsvRow& a, const CsvRow& b) {
  auto key = [](const CsvRow& r) {
    return std::make_tuple(r.t60_s, r.radius_m, r.vad_error, r.beamformer,
                           r.rep == "mean" ? 1 : 0, r.rep.size(), r.rep, r.metric, r.node);
  };
  return key(a) < key(b);
}

}  // namespace

std::string rows_to_csv(const std::vector<CsvRow>& rows) {
  std::string out = kCsvHeader;
  out.push_back('\n');
  for (const auto& row : rows) {
    out += format_csv_row(row);
    out.push_back('\n');
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, bool write_files, std::ostream* log) {
  spec.validate();
  const std::uint64_t hash = spec.config_hash();
  std::ostream& os = log ? *log : std::cout;

  // Cross product of the sweep axes; scenes cached per reverberation time.
  std::vector<Task> tasks;
  std::map<double, PreparedScene> prepared;
  int point = 0;
  for (double t60 : spec.t60_sweep_s) {
    if (!prepared.count(t60)) prepared.emplace(t60, prepare_scene(spec, t60));
    for (double r : spec.radius_sweep_m)
      for (double v : spec.vad_error_sweep) {
        for (int rep = 0; rep < spec.repetitions; ++rep)
          tasks.push_back({point, t60, r, v, rep});
        ++point;
      }
  }

  ExperimentResult result;
  std::mutex mu;
  std::atomic<size_t> next{0};
  std::atomic<int> failures{0};

  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      const std::uint64_t rep_seed = derive_seed(spec.seed, task.point_index, task.rep, 0xf00d);
      try {
        const auto evals = run_single(spec, prepared.at(task.t60), task.radius, task.vad_error,
                                      rep_seed);
        std::lock_guard<std::mutex> lock(mu);
        for (const auto& [kind, eval] : evals)
          emit_rows(result.rows, spec, task, kind, eval, hash);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        ++failures;
        os << "repetition failed (t60=" << task.t60 << " r=" << task.radius
           << " R=" << task.vad_error << " rep=" << task.rep << "): " << e.what() << "\n";
      }
    }
  };

  const int nworkers = std::min<int>(spec.workers, static_cast<int>(tasks.size()));
  if (nworkers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nworkers);
    for (int i = 0; i < nworkers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  result.failures = failures.load();

  // Aggregate means over repetitions for every (point, beamformer, metric, node).
  {
    std::map<std::tuple<double, double, double, std::string, std::string, int>,
             std::pair<double, int>>
        acc;
    for (const auto& row : result.rows) {
      auto key = std::make_tuple(row.t60_s, row.radius_m, row.vad_error, row.beamformer,
                                 row.metric, row.node);
      auto& slot = acc[key];
      slot.first += row.value;
      slot.second += 1;
    }
    for (const auto& [key, slot] : acc) {
      CsvRow row;
      row.setup = spec.name;
      std::tie(row.t60_s, row.radius_m, row.vad_error, row.beamformer, row.metric, row.node) =
          key;
      row.rep = "mean";
      row.value = slot.first / slot.second;
      row.seed = spec.seed;
      row.config_hash = hash;
      result.rows.push_back(row);
    }
  }
  std::sort(result.rows.begin(), result.rows.end(), row_order);

  if (write_files) {
    std::filesystem::create_directories(spec.output_dir);
    result.csv_path = (std::filesystem::path(spec.output_dir) / (spec.name + "_results.csv"))
                          .string();
    std::ofstream csv(result.csv_path, std::ios::binary);
    csv << rows_to_csv(result.rows);

    std::vector<CsvRow> means;
    for (const auto& row : result.rows)
      if (row.rep == "mean") means.push_back(row);
    result.summary_path =
        (std::filesystem::path(spec.output_dir) / (spec.name + "_summary.csv")).string();
    std::ofstream summary(result.summary_path, std::ios::binary);
    summary << rows_to_csv(means);
  }

  int mean_rows = 0;
  for (const auto& row : result.rows)
    if (row.rep == "mean") ++mean_rows;
  os << "experiment '" << spec.name << "': " << tasks.size() << " repetitions, "
     << result.rows.size() << " rows (" << mean_rows << " aggregate), " << result.failures
     << " failures\n";
  return result;
}

}  // namespace wasn
