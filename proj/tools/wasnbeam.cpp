#include "wasn/experiment.hpp"
#include "wasn/scene.hpp"
#include "wasn/verify.hpp"
#include "wasn/wav.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

std::string resolve_config_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path) || fs::path(path).is_absolute()) return path;
  if (const char* dir = std::getenv("WASNBEAM_CONFIG_DIR")) {
    const fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

int cmd_run(const std::string& spec_path, const std::string& output_dir, std::uint64_t seed,
            int workers, int repetitions) {
  wasn::ExperimentSpec spec = wasn::load_experiment(resolve_config_path(spec_path));
  if (!output_dir.empty()) spec.output_dir = output_dir;
  if (seed != 0) spec.seed = seed;
  if (workers > 0) spec.workers = workers;
  if (repetitions > 0) spec.repetitions = repetitions;
  const auto result = wasn::run_experiment(spec);
  std::cout << "results: " << result.csv_path << "\nsummary: " << result.summary_path << "\n";
  return result.failures == 0 ? 0 : 1;
}

int cmd_verify(bool full) {
  const auto results =
      wasn::run_verification(full ? wasn::VerifyLevel::Full : wasn::VerifyLevel::Quick);
  int failures = 0;
  for (const auto& r : results) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
    if (!r.passed) ++failures;
  }
  std::cout << results.size() - failures << "/" << results.size() << " checks passed\n";
  return failures == 0 ? 0 : 1;
}

int cmd_costs(int J, int N, int S, int t_max, int block, const std::string& mode) {
  const auto rows = wasn::predict_costs(J, N, S, t_max, block);
  std::printf("%-22s %-14s %-22s %-14s %-20s %-10s %s\n", "beamformer", "smoothing", "complexity",
              "value", "bandwidth", "reals", "ledger-checkable");
  for (const auto& row : rows) {
    if (!mode.empty() && row.smoothing != mode && row.smoothing != "once") continue;
    std::printf("%-22s %-14s %-22s %-14.0f %-20s %-10.0f %s\n", row.beamformer.c_str(),
                row.smoothing.c_str(), row.complexity.c_str(), row.complexity_value,
                row.bandwidth.c_str(), row.bandwidth_reals, row.ledger_checkable ? "yes" : "no");
  }
  return 0;
}

int cmd_render(const std::string& scene_path, const std::string& out_dir, double seconds,
               std::uint64_t seed) {
  namespace fs = std::filesystem;
  wasn::SceneSpec scene = scene_path == "builtin:default"
                              ? wasn::default_scene(0.3)
                              : wasn::load_scene(resolve_config_path(scene_path));
  if (seed != 0) scene.seed = seed;

  const int fs_hz = scene.stft.sample_rate_hz;
  std::vector<wasn::Vec> speech, noise;
  for (int s = 0; s < scene.num_speakers(); ++s)
    speech.push_back(
        wasn::synthesize_speech_like(seconds, fs_hz, wasn::derive_seed(scene.seed, 0x9595, s)));
  for (size_t v = 0; v < scene.noise_sources.size(); ++v)
    noise.push_back(wasn::synthesize_speech_shaped_noise(
        seconds, fs_hz, wasn::derive_seed(scene.seed, 0xb0b, v)));

  const auto rendered = wasn::render_scene(scene, speech, noise);
  fs::create_directories(out_dir);

  // Keep headroom: scale everything by one common factor.
  double peak = rendered.mixture.cwiseAbs().maxCoeff();
  for (const auto& img : rendered.speaker_images)
    peak = std::max(peak, img.cwiseAbs().maxCoeff());
  const double gain = peak > 0.0 ? 0.9 / peak : 1.0;

  auto write = [&](const std::string& name, const wasn::Mat& samples) {
    wasn::WavData wav;
    wav.sample_rate_hz = fs_hz;
    wav.samples = samples * gain;
    wasn::write_wav((fs::path(out_dir) / name).string(), wav, wasn::WavFormat::Float32);
  };
  write("mixture.wav", rendered.mixture);
  write("noise_image.wav", rendered.noise_image);
  for (size_t s = 0; s < rendered.speaker_images.size(); ++s)
    write("speaker" + std::to_string(s + 1) + "_image.wav", rendered.speaker_images[s]);

  nlohmann::json truth;
  truth["sample_rate_hz"] = fs_hz;
  truth["wav_gain"] = gain;
  truth["sensor_sigma"] = rendered.sensor_sigma;
  truth["speech_active"] = rendered.truth.speech_active;
  truth["vad"] = rendered.truth.vad;
  auto& tdoa = truth["tdoa_seconds"] = nlohmann::json::array();
  for (int j = 0; j < rendered.truth.tdoa_seconds.rows(); ++j) {
    nlohmann::json row = nlohmann::json::array();
    for (int s = 0; s < rendered.truth.tdoa_seconds.cols(); ++s)
      row.push_back(rendered.truth.tdoa_seconds(j, s));
    tdoa.push_back(row);
  }
  std::ofstream((fs::path(out_dir) / "ground_truth.json").string()) << truth.dump(2) << "\n";
  std::cout << "rendered " << rendered.mixture.rows() << " samples x "
            << rendered.mixture.cols() << " channels into " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WASN beamforming simulator: scene synthesis, distributed block-diagonal "
               "LCMV/LCMP beamforming with exact transmission accounting, and evaluation"};
  app.require_subcommand(1);

  std::string spec_path, output_dir, scene_path = "builtin:default", out_dir = "render_out";
  std::string mode;
  std::uint64_t seed = 0;
  int workers = 0, repetitions = 0;
  bool full = false;
  int J = 4, N = 6, S = 2, t_max = 1, block = 100;
  double seconds = 10.0;

  auto* run = app.add_subcommand("run", "Run an experiment spec and emit CSV results");
  run->add_option("spec", spec_path, "experiment spec (JSON)")->required();
  run->add_option("--output-dir", output_dir, "override output directory");
  run->add_option("--seed", seed, "override master seed");
  run->add_option("--workers", workers, "worker threads for repetitions");
  run->add_option("--repetitions", repetitions, "override repetitions per sweep point");

  auto* verify = app.add_subcommand("verify", "Run the oracle-equivalence check suite");
  verify->add_flag("--full", full, "include the long-run and sweep checks");

  auto* costs = app.add_subcommand("costs", "Print the analytic complexity/bandwidth table");
  costs->add_option("--J", J, "number of nodes")->check(CLI::PositiveNumber);
  costs->add_option("--N", N, "microphones per node")->check(CLI::PositiveNumber);
  costs->add_option("--S", S, "number of sources")->check(CLI::PositiveNumber);
  costs->add_option("--t-max", t_max, "iteration cap for the iterative baseline");
  costs->add_option("--block", block, "frames per block |L_y|");
  costs->add_option("--mode", mode, "filter: non-recursive or recursive");

  auto* render = app.add_subcommand("render", "Render a scene to WAV plus ground truth");
  render->add_option("scene", scene_path, "scene config (JSON) or builtin:default");
  render->add_option("--out", out_dir, "output directory");
  render->add_option("--seconds", seconds, "signal length");
  render->add_option("--seed", seed, "override scene seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(spec_path, output_dir, seed, workers, repetitions);
    if (verify->parsed()) return cmd_verify(full);
    if (costs->parsed()) return cmd_costs(J, N, S, t_max, block, mode);
    if (render->parsed()) return cmd_render(scene_path, out_dir, seconds, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
