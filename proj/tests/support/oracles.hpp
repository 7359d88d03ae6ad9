#pragma once

// Independent oracles used by the unit and acceptance suites. These avoid the
// library's solve paths on purpose: decay times come from backward
// integration, coherence from Welch cross-spectra, and constrained quadratic
// minima from projected gradient descent on a null-space parametrization.

#include "wasn/common.hpp"
#include "wasn/dsp.hpp"
#include "wasn/stft.hpp"

#include <Eigen/SVD>

#include <vector>

namespace oracles {

/// Reverberation time from Schroeder backward integration, fit between the
/// -5 dB and -25 dB points of the energy decay curve.
inline double schroeder_t60(const wasn::Vec& rir, int sample_rate_hz) {
  const long n = rir.size();
  wasn::Vec edc(n);
  double acc = 0.0;
  for (long t = n - 1; t >= 0; --t) {
    acc += rir(t) * rir(t);
    edc(t) = acc;
  }
  const double total = edc(0);
  long lo = -1, hi = -1;
  for (long t = 0; t < n; ++t) {
    const double db = 10.0 * std::log10(edc(t) / total + 1e-300);
    if (lo < 0 && db <= -5.0) lo = t;
    if (hi < 0 && db <= -25.0) {
      hi = t;
      break;
    }
  }
  if (lo < 0 || hi <= lo) throw std::runtime_error("decay range not reached");
  // Least-squares line through the dB curve on [lo, hi].
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const long m = hi - lo + 1;
  for (long t = lo; t <= hi; ++t) {
    const double x = static_cast<double>(t) / sample_rate_hz;
    const double y = 10.0 * std::log10(edc(t) / total);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return -60.0 / slope;
}

struct CoherenceEstimate {
  wasn::Vec freq_hz;
  wasn::Vec msc;            // magnitude-squared coherence
  wasn::Vec real_coherence; // Re of the complex coherence, for zero crossings
};

/// Welch cross-spectral coherence between two channels.
inline CoherenceEstimate welch_coherence(const wasn::Vec& a, const wasn::Vec& b,
                                         int sample_rate_hz, int nfft) {
  const int hop = nfft / 2;
  const int segments = static_cast<int>((a.size() - nfft) / hop) + 1;
  if (segments < 8) throw std::invalid_argument("signal too short for coherence estimate");
  const int bins = nfft / 2 + 1;
  std::vector<double> win(nfft);
  for (int t = 0; t < nfft; ++t) win[t] = 0.5 - 0.5 * std::cos(2.0 * M_PI * t / nfft);

  wasn::CVec sab = wasn::CVec::Zero(bins);
  wasn::Vec saa = wasn::Vec::Zero(bins), sbb = wasn::Vec::Zero(bins);
  std::vector<double> xa(nfft), xb(nfft);
  for (int seg = 0; seg < segments; ++seg) {
    const long off = static_cast<long>(seg) * hop;
    for (int t = 0; t < nfft; ++t) {
      xa[t] = win[t] * a(off + t);
      xb[t] = win[t] * b(off + t);
    }
    const auto fa = wasn::rfft(xa, nfft);
    const auto fb = wasn::rfft(xb, nfft);
    for (int f = 0; f < bins; ++f) {
      sab(f) += fa[f] * std::conj(fb[f]);
      saa(f) += std::norm(fa[f]);
      sbb(f) += std::norm(fb[f]);
    }
  }
  CoherenceEstimate est;
  est.freq_hz.resize(bins);
  est.msc.resize(bins);
  est.real_coherence.resize(bins);
  for (int f = 0; f < bins; ++f) {
    est.freq_hz(f) = static_cast<double>(f) * sample_rate_hz / nfft;
    const double denom = saa(f) * sbb(f);
    est.msc(f) = denom > 0.0 ? std::norm(sab(f)) / denom : 0.0;
    est.real_coherence(f) = denom > 0.0 ? sab(f).real() / std::sqrt(denom) : 0.0;
  }
  return est;
}

/// First zero crossing of the real coherence, linearly interpolated.
inline double first_zero_crossing_hz(const CoherenceEstimate& est) {
  for (int f = 1; f < est.freq_hz.size(); ++f) {
    const double prev = est.real_coherence(f - 1), cur = est.real_coherence(f);
    if (prev > 0.0 && cur <= 0.0) {
      const double frac = prev / (prev - cur);
      return est.freq_hz(f - 1) + frac * (est.freq_hz(f) - est.freq_hz(f - 1));
    }
  }
  throw std::runtime_error("no zero crossing found");
}

/// Minimum of w^H R w subject to w^H Q = g^H, via projected gradient descent
/// on w = w0 + N v with N a null-space basis of Q^H. Independent of the
/// library's closed-form solve.
inline double constrained_quadratic_minimum(const wasn::CMat& noise_cov, const wasn::CMat& q,
                                            const wasn::CVec& gains, int iterations = 20000) {
  const int m = static_cast<int>(q.rows());
  const int s = static_cast<int>(q.cols());
  // Feasible point: least-norm solution of Q^H w = g.
  Eigen::JacobiSVD<wasn::CMat> svd(q.adjoint(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const wasn::CVec w0 = svd.solve(gains);
  const wasn::CMat null_basis = svd.matrixV().rightCols(m - s);

  wasn::CVec v = wasn::CVec::Zero(m - s);
  wasn::CVec w = w0;
  for (int it = 0; it < iterations; ++it) {
    const wasn::CVec grad = null_basis.adjoint() * (noise_cov * w);
    const double gnorm = grad.squaredNorm();
    if (gnorm < 1e-30) break;
    const wasn::CVec dir = null_basis * grad;
    const double curvature = (dir.adjoint() * (noise_cov * dir))(0).real();
    if (curvature <= 0.0) break;
    const double step = gnorm / curvature;
    v -= step * grad;
    w = w0 + null_basis * v;
  }
  return (w.adjoint() * (noise_cov * w))(0).real();
}

/// Plain time-domain cross-correlation peak lag (b relative to a), in samples.
inline long xcorr_peak_lag(const wasn::Vec& a, const wasn::Vec& b, int max_lag) {
  long best = 0;
  double best_val = -1e300;
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (long t = std::max<long>(0, -lag); t < a.size() && t + lag < b.size(); ++t)
      acc += a(t) * b(t + lag);
    if (acc > best_val) {
      best_val = acc;
      best = lag;
    }
  }
  return best;
}

}  // namespace oracles
