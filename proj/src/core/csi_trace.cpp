// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#include "csi_trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "filter.hpp"

namespace sp {

void CsiTrace::validate() const {
  if (nt < 1 || nr < 1 || k < 1) throw std::invalid_argument("csi trace: bad antenna/subcarrier counts");
  for (size_t i = 0; i < samples.size(); ++i) {
    if (int(samples[i].power.size()) != values_per_sample())
      throw std::invalid_argument("csi trace: power row size mismatch at sample " + std::to_string(i));
    if (i > 0 && samples[i].t <= samples[i - 1].t)
      throw std::invalid_argument("csi trace: timestamps not strictly increasing at sample " +
                                  std::to_string(i));
  }
}

void FrameClock::validate() const {
  if (fps <= 0) throw std::invalid_argument("frame clock: fps must be > 0");
  if (frame_times.empty()) throw std::invalid_argument("frame clock: empty");
  for (size_t i = 1; i < frame_times.size(); ++i)
    if (frame_times[i] <= frame_times[i - 1])
      throw std::invalid_argument("frame clock: timestamps not strictly increasing");
}

CsiTrace parse_csi_trace(const std::string& path) {
  std::ifstream meta_in(path + ".meta.json");
  if (!meta_in) throw IoError("cannot open " + path + ".meta.json");
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ".meta.json: " + e.what());
  }

  CsiTrace trace;
  try {
    trace.nt = meta.at("nt").get<int>();
    trace.nr = meta.at("nr").get<int>();
    trace.k = meta.at("k").get<int>();
    trace.nominal_rate_hz = meta.at("nominal_rate_hz").get<double>();
    trace.center_freq_hz = meta.at("center_freq_hz").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ".meta.json: missing field: " + e.what());
  }
  if (trace.nt < 1 || trace.nr < 1 || trace.k < 1)
    throw ParseError(path + ".meta.json: antenna/subcarrier counts must be positive");

  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  int lineno = 0;
  const int cols = trace.values_per_sample() + 1;

  if (!std::getline(in, line)) throw ParseError(path + ":1: missing header");
  ++lineno;
  {
    std::ostringstream expect;
    expect << "t";
    for (int i = 1; i <= trace.values_per_sample(); ++i) expect << ",p_" << i;
    if (line != expect.str())
      throw ParseError(path + ":1: header does not match nt*nr*k from the meta sidecar");
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    CsiTrace::Sample s;
    s.power.reserve(size_t(cols - 1));
    size_t pos = 0;
    int col = 0;
    while (pos <= line.size()) {
      size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      const std::string tok = line.substr(pos, next - pos);
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0')
        throw ParseError(path + ":" + std::to_string(lineno) + ": malformed value '" + tok + "'");
      if (col == 0)
        s.t = v;
      else
        s.power.push_back(v);
      ++col;
      pos = next + 1;
      if (next == line.size()) break;
    }
    if (col != cols)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                       " columns, got " + std::to_string(col));
    if (!trace.samples.empty() && s.t <= trace.samples.back().t)
      throw ParseError(path + ":" + std::to_string(lineno) + ": timestamp not increasing");
    trace.samples.push_back(std::move(s));
  }
  trace.validate();
  return trace;
}

void write_csi_trace(const std::string& path, const CsiTrace& trace) {
  trace.validate();
  {
    nlohmann::json meta;
    meta["nt"] = trace.nt;
    meta["nr"] = trace.nr;
    meta["k"] = trace.k;
    meta["nominal_rate_hz"] = trace.nominal_rate_hz;
    meta["center_freq_hz"] = trace.center_freq_hz;
    std::ofstream out(path + ".meta.json");
    if (!out) throw IoError("cannot write " + path + ".meta.json");
    out << meta.dump(2) << "\n";
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "t";
  for (int i = 1; i <= trace.values_per_sample(); ++i) out << ",p_" << i;
  out << "\n";
  char buf[64];
  for (const auto& s : trace.samples) {
    std::snprintf(buf, sizeof buf, "%.17g", s.t);
    out << buf;
    for (double v : s.power) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

AlignedGop align(const CsiTrace& trace, const FrameClock& clock, int F) {
  trace.validate();
  clock.validate();
  if (F < 1) throw std::invalid_argument("align: F must be >= 1");
  if (trace.samples.size() < 2) throw std::invalid_argument("align: trace needs >= 2 samples");

  const int M = clock.gop_size();
  AlignedGop out;
  out.frames.resize(size_t(M));
  const double span_lo = trace.samples.front().t;
  const double span_hi = trace.samples.back().t;
  const double nominal_dt = 1.0 / trace.nominal_rate_hz;

  // resample targets are nondecreasing, so the bracket only advances
  size_t n = 1;  // samples[n-1].t <= tf <= samples[n].t
  for (int m = 0; m < M; ++m) {
    const double tm_prev = (m == 0) ? clock.t0() : clock.frame_times[size_t(m - 1)];
    const double tm = clock.frame_times[size_t(m)];
    const double dt = (tm - tm_prev) / double(F);
    out.frames[size_t(m)].reserve(size_t(F));
    for (int f = 1; f <= F; ++f) {
      const double tf = tm_prev + f * dt;
      if (tf < span_lo || tf > span_hi)
        throw std::invalid_argument("align: requested time " + std::to_string(tf) +
                                    " outside trace span");
      while (n + 1 < trace.samples.size() && trace.samples[n].t <= tf) ++n;
      const auto& a0 = trace.samples[n - 1];
      const auto& a1 = trace.samples[n];
      if (a1.t - a0.t > 5.0 * nominal_dt) out.low_quality = true;
      std::vector<double> v;
      if (tf == a0.t) {  // eta = 0: the measurement itself
        v = a0.power;
      } else if (tf == a1.t) {  // eta = 1
        v = a1.power;
      } else {
        const double eta = (tf - a0.t) / (a1.t - a0.t);
        v.resize(a0.power.size());
        for (size_t i = 0; i < v.size(); ++i)
          v[i] = a0.power[i] + eta * (a1.power[i] - a0.power[i]);
      }
      out.frames[size_t(m)].push_back(std::move(v));
    }
  }
  return out;
}

std::vector<Tensor> stack_rf_frames(const std::vector<std::vector<std::vector<double>>>& frames,
                                    int links, int k, int F) {
  std::vector<Tensor> out;
  out.reserve(frames.size());
  for (const auto& frame : frames) {
    if (int(frame.size()) != F)
      throw std::invalid_argument("rf frame assembly: expected " + std::to_string(F) +
                                  " samples per frame, got " + std::to_string(frame.size()));
    Tensor t({links, k, F});
    for (int f = 0; f < F; ++f) {
      const auto& v = frame[size_t(f)];
      if (int(v.size()) != links * k)
        throw std::invalid_argument("rf frame assembly: sample size mismatch");
      for (int l = 0; l < links; ++l)
        for (int s = 0; s < k; ++s) t.at3(l, s, f) = float(v[size_t(l * k + s)]);
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Tensor> assemble_rf_frames(const AlignedGop& aligned, const CsiTrace& trace,
                                       const FrameClock& clock, int F, double cutoff_hz,
                                       int filter_order) {
  const int M = int(aligned.frames.size());
  const int vals = trace.values_per_sample();
  const double fs_aligned = clock.fps * double(F);
  const ButterworthLowpass lp(fs_aligned, cutoff_hz, filter_order);

  // per (link, subcarrier) series across the whole GOP
  std::vector<std::vector<std::vector<double>>> denoised(size_t(M));
  for (int m = 0; m < M; ++m)
    denoised[size_t(m)].assign(size_t(F), std::vector<double>(size_t(vals)));

  std::vector<double> series(size_t(M) * size_t(F));
  for (int i = 0; i < vals; ++i) {
    for (int m = 0; m < M; ++m)
      for (int f = 0; f < F; ++f) series[size_t(m * F + f)] = aligned.frames[size_t(m)][size_t(f)][size_t(i)];
    const std::vector<double> filtered = lp.apply(series);
    for (int m = 0; m < M; ++m)
      for (int f = 0; f < F; ++f) denoised[size_t(m)][size_t(f)][size_t(i)] = filtered[size_t(m * F + f)];
  }
  return stack_rf_frames(denoised, trace.links(), trace.k, F);
}

}  // namespace sp
