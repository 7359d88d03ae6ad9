#include "wasn/dsp.hpp"

#include <unsupported/Eigen/FFT>

namespace wasn {

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<cdouble> rfft(const std::vector<double>& x, int n) {
  if (n % 2 != 0) throw std::invalid_argument("rfft length must be even");
  std::vector<double> padded = x;
  padded.resize(n, 0.0);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<cdouble> spec;
  fft.fwd(spec, padded);
  return spec;
}

std::vector<double> irfft(const std::vector<cdouble>& spec, int n) {
  if (static_cast<int>(spec.size()) != n / 2 + 1)
    throw std::invalid_argument("irfft spectrum size does not match n/2+1");
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> out(n);
  fft.inv(out, spec, n);
  return out;
}

Vec fft_convolve(const Eigen::Ref<const Vec>& a, const Eigen::Ref<const Vec>& b) {
  const int out_len = static_cast<int>(a.size() + b.size()) - 1;
  if (a.size() == 0 || b.size() == 0) return Vec::Zero(std::max(out_len, 0));
  const int n = next_pow2(out_len);
  std::vector<double> xa(a.data(), a.data() + a.size());
  std::vector<double> xb(b.data(), b.data() + b.size());
  auto sa = rfft(xa, n);
  auto sb = rfft(xb, n);
  for (size_t i = 0; i < sa.size(); ++i) sa[i] *= sb[i];
  auto full = irfft(sa, n);
  return Eigen::Map<const Vec>(full.data(), out_len);
}

}  // namespace wasn
