#include "wasn/stft.hpp"

#include "wasn/dsp.hpp"

namespace wasn {

void AnalysisConfig::validate() const {
  if (sample_rate_hz <= 0) throw std::invalid_argument("sample rate must be positive");
  if (frame_length <= 0 || (frame_length & (frame_length - 1)) != 0)
    throw std::invalid_argument("frame length must be a power of two");
  if (hop_length <= 0 || hop_length > frame_length)
    throw std::invalid_argument("hop must be in [1, frame_length]");
}

std::vector<double> make_window(Window w, int length) {
  std::vector<double> win(length, 1.0);
  if (w == Window::Hann) {
    // Periodic Hann; COLA at 50% overlap.
    for (int n = 0; n < length; ++n)
      win[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / length);
  }
  return win;
}

SpectralFrames analyze(const Mat& signals, const AnalysisConfig& cfg, const NodeLayout& layout) {
  cfg.validate();
  if (signals.cols() != layout.num_channels())
    throw std::invalid_argument("channel count does not match node layout");

  const int n = cfg.frame_length;
  const int bins = cfg.num_bins();
  const int channels = static_cast<int>(signals.cols());
  const int num_frames = cfg.num_frames(signals.rows());
  const auto win = make_window(cfg.window, n);

  SpectralFrames out;
  out.cfg = cfg;
  out.layout = layout;
  out.frames.resize(num_frames);

  std::vector<double> buf(n);
  for (int l = 0; l < num_frames; ++l) {
    auto& frame = out.frames[l];
    frame.frame_index = l;
    frame.bins.resize(channels, bins);
    const long start = static_cast<long>(l) * cfg.hop_length;
    for (int c = 0; c < channels; ++c) {
      for (int t = 0; t < n; ++t) buf[t] = win[t] * signals(start + t, c);
      const auto spec = rfft(buf, n);
      for (int f = 0; f < bins; ++f) frame.bins(c, f) = spec[f];
    }
  }
  return out;
}

SpectralFrames analyze(const std::vector<Vec>& channels, const AnalysisConfig& cfg,
                       const NodeLayout& layout) {
  if (channels.empty()) throw std::invalid_argument("no channels");
  for (const auto& ch : channels)
    if (ch.size() != channels.front().size()) throw std::invalid_argument("ragged input");
  Mat signals(channels.front().size(), channels.size());
  for (size_t c = 0; c < channels.size(); ++c) signals.col(c) = channels[c];
  return analyze(signals, cfg, layout);
}

Mat synthesize(const SpectralFrames& frames) {
  const auto& cfg = frames.cfg;
  cfg.validate();
  const int channels = frames.num_channels();
  const int n = cfg.frame_length;
  const int bins = cfg.num_bins();
  if (frames.frames.empty()) return Mat::Zero(0, channels);
  for (const auto& fr : frames.frames)
    if (fr.bins.cols() != bins || fr.bins.rows() != channels)
      throw std::invalid_argument("inconsistent bin count across frames");

  const int num_frames = frames.num_frames();
  const long length = static_cast<long>(num_frames - 1) * cfg.hop_length + n;
  const auto win = make_window(cfg.window, n);

  Mat out = Mat::Zero(length, channels);
  Vec norm = Vec::Zero(length);
  std::vector<cdouble> spec(bins);
  for (int l = 0; l < num_frames; ++l) {
    const long start = static_cast<long>(l) * cfg.hop_length;
    for (int t = 0; t < n; ++t) norm[start + t] += win[t] * win[t];
    for (int c = 0; c < channels; ++c) {
      for (int f = 0; f < bins; ++f) spec[f] = frames.frames[l].bins(c, f);
      const auto time = irfft(spec, n);
      for (int t = 0; t < n; ++t) out(start + t, c) += win[t] * time[t];
    }
  }
  for (long t = 0; t < length; ++t) {
    const double d = norm[t];
    if (d > 1e-12) out.row(t) /= d;
  }
  return out;
}

Vec synthesize_single(const CMat& bins_by_frames, const AnalysisConfig& cfg) {
  SpectralFrames tmp;
  tmp.cfg = cfg;
  tmp.layout = NodeLayout({1});
  tmp.frames.resize(bins_by_frames.cols());
  for (int l = 0; l < bins_by_frames.cols(); ++l) {
    tmp.frames[l].frame_index = l;
    tmp.frames[l].bins = bins_by_frames.col(l).transpose();
  }
  return synthesize(tmp).col(0);
}

}  // namespace wasn
