#pragma once

#include "wasn/metrics.hpp"
#include "wasn/network.hpp"
#include "wasn/scene.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace wasn {

struct ExperimentSpec {
  std::string name = "experiment";
  SceneSpec scene = default_scene(0.3);
  std::vector<BeamformerKind> beamformers = {
      BeamformerKind::Dnds, BeamformerKind::CentralizedLcmv, BeamformerKind::DnbdLcmv};
  std::vector<double> radius_sweep_m = {0.0};
  std::vector<double> vad_error_sweep = {0.0};
  std::vector<double> t60_sweep_s = {0.3};
  int repetitions = 10;
  std::uint64_t seed = 1;
  double signal_seconds = 10.0;
  std::string output_dir = "out";
  int workers = 1;
  int target_speaker = 0;

  void validate() const;
  std::uint64_t config_hash() const;
};

ExperimentSpec experiment_from_json(const std::string& text, const std::string& config_dir = "");
std::string experiment_to_json(const ExperimentSpec& spec);
ExperimentSpec load_experiment(const std::string& path);

/// Scene rendered once per reverberation time; repetitions only redraw the
/// training positions, the VAD-error set, and the sensor noise.
struct PreparedScene {
  SceneSpec scene;
  RenderedScene render;
  Mat speech_image_sum;     // target + competing speakers
  Mat competing_image_sum;  // speakers with zero desired gain
  Vec selection;            // desired response per source
};

PreparedScene prepare_scene(const ExperimentSpec& spec, double t60_s);

/// One repetition at one sweep point: fresh training draw, VAD-error draw and
/// sensor-noise realization, then every requested beamformer.
std::map<BeamformerKind, EvalResult> run_single(const ExperimentSpec& spec,
                                                const PreparedScene& prepared, double radius_m,
                                                double vad_error, std::uint64_t rep_seed);

struct ExperimentResult {
  std::vector<CsvRow> rows;
  int failures = 0;
  std::string csv_path;
  std::string summary_path;
};

ExperimentResult run_experiment(const ExperimentSpec& spec, bool write_files = true,
                                std::ostream* log = nullptr);

std::string rows_to_csv(const std::vector<CsvRow>& rows);

/// Spearman rank correlation; used for the positional-error trend reports.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace wasn
