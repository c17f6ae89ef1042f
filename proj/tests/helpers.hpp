#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "velan/kernel.hpp"
#include "velan/traveltime.hpp"
#include "velan/types.hpp"

namespace testutil {

// Gather whose traces are given directly as sample rows. Sources sit at the
// origin; receivers at 2*half_offset along x so h2 = half_offset^2.
inline velan::CdpGather make_gather(
    const std::vector<std::vector<float>>& rows, std::uint32_t dt_us,
    float half_offset = 0.0f, std::uint32_t cdp_id = 0) {
  velan::CdpGather g;
  g.cdp_id = cdp_id;
  g.dt_us = dt_us;
  g.ns = rows.empty() ? 0 : static_cast<std::uint32_t>(rows.front().size());
  for (const auto& row : rows) {
    velan::Trace t;
    t.gx = 2.0f * half_offset;
    t.samples = row;
    g.traces.push_back(std::move(t));
  }
  return g;
}

// Random gather with offsets spread over [0, max_offset] and samples in
// [-1, 1]. dt defaults to 1/4096 s so whole-sample times are exact.
inline velan::CdpGather random_gather(std::mt19937_64& rng, int fold, int ns,
                                      std::uint32_t dt_us = 244,
                                      float max_offset = 100.0f,
                                      std::uint32_t cdp_id = 0) {
  std::uniform_real_distribution<float> amp(-1.0f, 1.0f);
  velan::CdpGather g;
  g.cdp_id = cdp_id;
  g.dt_us = dt_us;
  g.ns = static_cast<std::uint32_t>(ns);
  for (int m = 0; m < fold; ++m) {
    velan::Trace t;
    const float off =
        fold == 1 ? 0.0f
                  : max_offset * static_cast<float>(m) /
                        static_cast<float>(fold - 1);
    t.gx = off;
    t.samples.resize(ns);
    for (float& s : t.samples) s = amp(rng);
    g.traces.push_back(std::move(t));
  }
  return g;
}

// Independent semblance reference for tests: materializes every window value
// (same hit rule as the library), then evaluates the coherence column sums
// in doubles. Shares no accumulation code with the kernels.
inline velan::SemblanceResult brute_semblance(const velan::CdpGather& g,
                                              float t0, float v, int w,
                                              float d2 = 0.0f) {
  const double dt_s = g.dt_seconds();
  const int ns = static_cast<int>(g.ns);
  std::vector<std::vector<float>> windows;
  for (const velan::Trace& trace : g.traces) {
    const float dx = trace.gx - trace.sx;
    const float dy = trace.gy - trace.sy;
    const float h2 = (dx * dx + dy * dy) * 0.25f;
    const float time = velan::crs_traveltime(t0, h2, d2, v);
    const velan::CurveHit hit = velan::hit_for(time, dt_s, ns, w);
    if (!hit.valid) continue;
    std::vector<float> win(w);
    for (int j = 0; j < w; ++j) {
      const double a = trace.samples[hit.k1 + j];
      const double b = trace.samples[hit.k1 + j + 1];
      win[j] = static_cast<float>((b - a) * static_cast<double>(hit.x) + a);
    }
    windows.push_back(std::move(win));
  }
  velan::SemblanceResult r;
  r.m_used = static_cast<int>(windows.size());
  if (windows.empty()) return r;
  double num_sq = 0.0;
  double den = 0.0;
  double linear = 0.0;
  for (int j = 0; j < w; ++j) {
    double col = 0.0;
    for (const auto& win : windows) {
      col += win[j];
      den += static_cast<double>(win[j]) * win[j];
      linear += win[j];
    }
    num_sq += col * col;
  }
  if (den > 0.0) r.semblance = static_cast<float>(num_sq / den);
  r.stack = static_cast<float>(linear / (static_cast<double>(r.m_used) * w));
  return r;
}

}  // namespace testutil
