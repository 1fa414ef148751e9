// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <vector>

namespace sp {

/// One second-order section of a cascaded IIR filter (a0 normalized to 1).
struct Biquad {
  double b0 = 0, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

/// Low-pass Butterworth designed with the bilinear transform as cascaded
/// second-order sections. The requested cutoff is clamped to 0.9 * fs/2 so
/// configurations above Nyquist stay realizable. DC gain is exactly 1 by
/// construction.
class ButterworthLowpass {
 public:
  ButterworthLowpass(double fs, double cutoff_hz, int order);

  /// Causal single-pass filtering with zero initial state.
  std::vector<double> apply(const std::vector<double>& series) const;

  const std::vector<Biquad>& sections() const { return sections_; }
  double effective_cutoff_hz() const { return effective_cutoff_; }

  /// Magnitude response |H(e^{j 2 pi f / fs})|.
  double magnitude_at(double freq_hz) const;

 private:
  std::vector<Biquad> sections_;
  double fs_ = 0;
  double effective_cutoff_ = 0;
};

}  // namespace sp
