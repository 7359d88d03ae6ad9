#pragma once

#include "wasn/common.hpp"

#include <vector>

namespace wasn {

/// Forward real FFT, one-sided spectrum (n/2 + 1 bins). n must be even.
std::vector<cdouble> rfft(const std::vector<double>& x, int n);

/// Inverse of rfft: one-sided spectrum back to n real samples.
std::vector<double> irfft(const std::vector<cdouble>& spec, int n);

/// Linear convolution via FFT, output length a.size() + b.size() - 1.
Vec fft_convolve(const Eigen::Ref<const Vec>& a, const Eigen::Ref<const Vec>& b);

int next_pow2(int n);

}  // namespace wasn
