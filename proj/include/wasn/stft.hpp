#pragma once

#include "wasn/common.hpp"

#include <vector>

namespace wasn {

enum class Window { Hann, Rect };

struct AnalysisConfig {
  int sample_rate_hz = 8000;
  int frame_length = 512;
  int hop_length = 256;
  Window window = Window::Hann;

  int num_bins() const { return frame_length / 2 + 1; }
  double bin_hz(int f) const {
    return static_cast<double>(f) * sample_rate_hz / frame_length;
  }
  int num_frames(long num_samples) const {
    if (num_samples < frame_length) return 0;
    return static_cast<int>((num_samples - frame_length) / hop_length) + 1;
  }
  void validate() const;
};

/// One analysis frame: column f holds the stacked M-channel observation y(f, l).
struct SpectralFrame {
  int frame_index = 0;
  CMat bins;  // channels x bins
};

struct SpectralFrames {
  AnalysisConfig cfg;
  NodeLayout layout;
  std::vector<SpectralFrame> frames;

  int num_frames() const { return static_cast<int>(frames.size()); }
  int num_bins() const { return cfg.num_bins(); }
  int num_channels() const { return layout.num_channels(); }

  /// Stacked observation y(f, l).
  CVec observation(int bin, int frame) const { return frames.at(frame).bins.col(bin); }
  /// Node j's sub-vector y_j(f, l).
  CVec node_observation(int node, int bin, int frame) const {
    return frames.at(frame).bins.col(bin).segment(layout.offset_of(node), layout.mics_at(node));
  }
};

/// signals: samples x channels. Throws "ragged input" when handed per-channel
/// data of unequal lengths (see analyze overload below).
SpectralFrames analyze(const Mat& signals, const AnalysisConfig& cfg, const NodeLayout& layout);
SpectralFrames analyze(const std::vector<Vec>& channels, const AnalysisConfig& cfg,
                       const NodeLayout& layout);

/// Weighted overlap-add inverse of analyze. Perfect reconstruction on the
/// interior for COLA-satisfying configs.
Mat synthesize(const SpectralFrames& frames);

/// Synthesize a single-channel spectrogram given as bins x frames.
Vec synthesize_single(const CMat& bins_by_frames, const AnalysisConfig& cfg);

std::vector<double> make_window(Window w, int length);

}  // namespace wasn
