// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "tensor.hpp"

namespace sp {

/// Raw CSI power trace: one row per measurement, Nt*Nr antenna links times
/// K subcarriers per row, strictly increasing timestamps.
struct CsiTrace {
  int nt = 0;
  int nr = 0;
  int k = 0;
  double nominal_rate_hz = 0;
  double center_freq_hz = 0;

  struct Sample {
    double t = 0;
    std::vector<double> power;  // [link * k], link-major
  };
  std::vector<Sample> samples;

  int links() const { return nt * nr; }
  int values_per_sample() const { return nt * nr * k; }
  void validate() const;
};

/// Video-frame timestamps t_1..t_M for one GOP; t_0 (the previous frame
/// boundary) is derived as t_1 - 1/fps.
struct FrameClock {
  std::vector<double> frame_times;
  double fps = 0;

  int gop_size() const { return int(frame_times.size()); }
  double t0() const { return frame_times.at(0) - 1.0 / fps; }
  void validate() const;
};

/// CSV trace file with a `<name>.meta.json` sidecar.
CsiTrace parse_csi_trace(const std::string& path);
void write_csi_trace(const std::string& path, const CsiTrace& trace);

struct AlignedGop {
  // [frame][f][link*k] resampled measurements; f = 1..F per frame
  std::vector<std::vector<std::vector<double>>> frames;
  // set when an interpolation target fell in a gap longer than five nominal
  // sample intervals (packet loss); the GOP is still processed
  bool low_quality = false;
};

/// Linear-interpolation resampling of F measurements per video frame at
/// constant intra-frame spacing. Throws if the trace does not cover the
/// requested times.
AlignedGop align(const CsiTrace& trace, const FrameClock& clock, int F);

/// Causal low-pass filtering applied independently per (link, subcarrier)
/// series across the whole aligned GOP, then per-frame stacking into
/// [Nt*Nr, K, F] tensors.
std::vector<Tensor> assemble_rf_frames(const AlignedGop& aligned, const CsiTrace& trace,
                                       const FrameClock& clock, int F, double cutoff_hz,
                                       int filter_order);

/// Frame stacking without the filtering stage (exposed for tests).
std::vector<Tensor> stack_rf_frames(const std::vector<std::vector<std::vector<double>>>& frames,
                                    int links, int k, int F);

}  // namespace sp
