// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#include "filter.hpp"

#include <cmath>
#include <stdexcept>

namespace sp {

ButterworthLowpass::ButterworthLowpass(double fs, double cutoff_hz, int order) : fs_(fs) {
  if (fs <= 0) throw std::invalid_argument("butterworth: fs must be > 0");
  if (order < 1) throw std::invalid_argument("butterworth: order must be >= 1");
  if (cutoff_hz <= 0) throw std::invalid_argument("butterworth: cutoff must be > 0");

  effective_cutoff_ = std::min(cutoff_hz, 0.9 * fs / 2.0);
  // prewarped analog cutoff for the bilinear transform
  const double wa = std::tan(M_PI * effective_cutoff_ / fs);

  // conjugate pole pairs of the analog prototype, s = wa * (-sin t + j cos t)
  const int pairs = order / 2;
  for (int k = 0; k < pairs; ++k) {
    const double t = (2.0 * k + 1.0) * M_PI / (2.0 * order);
    const double st = std::sin(t);
    const double d0 = 1.0 + 2.0 * st * wa + wa * wa;
    Biquad s;
    s.b0 = wa * wa / d0;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
    s.a1 = (2.0 * wa * wa - 2.0) / d0;
    s.a2 = (1.0 - 2.0 * st * wa + wa * wa) / d0;
    sections_.push_back(s);
  }
  if (order % 2 == 1) {
    // real pole at s = -wa
    const double d0 = 1.0 + wa;
    Biquad s;
    s.b0 = wa / d0;
    s.b1 = s.b0;
    s.b2 = 0.0;
    s.a1 = (wa - 1.0) / d0;
    s.a2 = 0.0;
    sections_.push_back(s);
  }
}

std::vector<double> ButterworthLowpass::apply(const std::vector<double>& series) const {
  std::vector<double> out = series;
  for (const Biquad& s : sections_) {
    // direct form II transposed
    double z1 = 0.0, z2 = 0.0;
    for (double& v : out) {
      const double x = v;
      const double y = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * y + z2;
      z2 = s.b2 * x - s.a2 * y;
      v = y;
    }
  }
  return out;
}

double ButterworthLowpass::magnitude_at(double freq_hz) const {
  const std::complex<double> z = std::polar(1.0, -2.0 * M_PI * freq_hz / fs_);
  std::complex<double> h = 1.0;
  for (const Biquad& s : sections_) {
    const std::complex<double> num = s.b0 + s.b1 * z + s.b2 * z * z;
    const std::complex<double> den = 1.0 + s.a1 * z + s.a2 * z * z;
    h *= num / den;
  }
  return std::abs(h);
}

}  // namespace sp
