#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "velan/error.hpp"
#include "velan/scan.hpp"
#include "velan/traveltime.hpp"
#include "velan/types.hpp"

namespace velan {

// Deliberately naive sequential reference. It shares only the traveltime
// hit rule with the kernels; window materialization and all accumulation
// are written from the coherence formula directly, in doubles.
namespace oracle {

struct ErrorReport {
  double max_rel_err = 0.0;
  double mean_rel_err = 0.0;
  std::uint64_t cells = 0;
  std::uint64_t argmax_mismatches = 0;
  std::uint64_t tie_excused = 0;
};

namespace detail {

// Window values stay single precision with the interpolation evaluated the
// way the search kernels evaluate it: the reference measures accumulation
// differences, not a precision gap in the inputs.
struct WindowMatrix {
  std::vector<float> values;  // m_used rows of w columns
  int m_used = 0;
};

inline void gather_windows(const CdpGather& g, float t0, float v, int w,
                           float d2, WindowMatrix& out) {
  const double dt_s = g.dt_seconds();
  const int ns = static_cast<int>(g.ns);
  for (const Trace& trace : g.traces) {
    const float dx = trace.gx - trace.sx;
    const float dy = trace.gy - trace.sy;
    const float h2 = (dx * dx + dy * dy) * 0.25f;
    const float time = crs_traveltime(t0, h2, d2, v);
    const CurveHit hit = hit_for(time, dt_s, ns, w);
    if (!hit.valid) continue;
    for (int j = 0; j < w; ++j) {
      const float a = trace.samples[hit.k1 + j];
      const float b = trace.samples[hit.k1 + j + 1];
      out.values.push_back((b - a) * hit.x + a);
    }
    ++out.m_used;
  }
}

}  // namespace detail

// Direct evaluation of the semblance formula for one search point: central
// gather plus every candidate within the closed ball of radius apm, in
// cdp_id order.
inline SemblanceResult semblance_reference(
    const CdpGather& central, std::span<const CdpGather* const> candidates,
    float t0, float v, int w, double apm) {
  if (w < 1) throw parameter_error("semblance_reference: w must be >= 1");
  detail::WindowMatrix windows;
  detail::gather_windows(central, t0, v, w, 0.0f, windows);

  const Midpoint c = midpoint_of(central);
  std::vector<const CdpGather*> within;
  for (const CdpGather* g : candidates) {
    if (g == &central || g->traces.empty()) continue;
    const Midpoint m = midpoint_of(*g);
    const double dx = m.mx - c.mx;
    const double dy = m.my - c.my;
    if (dx * dx + dy * dy <= apm * apm) within.push_back(g);
  }
  std::sort(within.begin(), within.end(),
            [](const CdpGather* a, const CdpGather* b) {
              return a->cdp_id < b->cdp_id;
            });
  for (const CdpGather* g : within) {
    const Midpoint m = midpoint_of(*g);
    const float dx = m.mx - c.mx;
    const float dy = m.my - c.my;
    detail::gather_windows(*g, t0, v, w, dx * dx + dy * dy, windows);
  }

  SemblanceResult r;
  r.m_used = windows.m_used;
  if (windows.m_used == 0) return r;
  // column sums in single precision, trace order, like the data was read;
  // the squared sums are positive so doubles are safe there
  double num_sq = 0.0;
  double den = 0.0;
  double linear = 0.0;
  for (int j = 0; j < w; ++j) {
    float col = 0.0f;
    for (int m = 0; m < windows.m_used; ++m)
      col += windows.values[static_cast<std::size_t>(m) * w + j];
    num_sq += static_cast<double>(col) * col;
  }
  for (const float x : windows.values) {
    den += static_cast<double>(x) * x;
    linear += x;
  }
  if (den > 0.0) r.semblance = static_cast<float>(num_sq / den);
  r.stack =
      static_cast<float>(linear / (static_cast<double>(windows.m_used) * w));
  return r;
}

// Full reference matrix for one central CDP (CMP when apm <= 0 or no
// candidates are given).
inline SemblanceMatrix reference_matrix(
    const CdpGather& central, std::span<const CdpGather* const> candidates,
    const ScanConfig& config, double apm) {
  config.validate();
  const VelocityGrid grid = config.grid();
  const int ns = static_cast<int>(central.ns);
  const double dt_s = central.dt_seconds();

  SemblanceMatrix out;
  out.cdp_id = central.cdp_id;
  out.ns = ns;
  out.nc = config.nc;
  out.values.resize(static_cast<std::size_t>(ns) * config.nc);
  out.best_velocity.resize(ns);
  out.stack_trace.assign(ns, 0.0f);
  for (int k = 0; k < ns; ++k) {
    const float t0 = static_cast<float>(k * dt_s);
    int best_c = 0;
    float best_s = 0.0f;
    float best_stack = 0.0f;
    for (int c = 0; c < config.nc; ++c) {
      const SemblanceResult r = semblance_reference(
          central, candidates, t0, grid.value(c), config.w, apm);
      out.at(k, c) = r.semblance;
      if (c == 0 || r.semblance > best_s) {
        best_c = c;
        best_s = r.semblance;
        best_stack = r.stack;
      }
    }
    out.best_velocity[k] = BestPick{grid.value(best_c), best_s};
    out.stack_trace[k] = best_stack;
  }
  return out;
}

inline std::vector<SemblanceMatrix> run_reference_cmp(
    const Dataset& dataset, const ScanConfig& config) {
  std::vector<SemblanceMatrix> out;
  out.reserve(dataset.gathers.size());
  for (const CdpGather& g : dataset.gathers)
    out.push_back(reference_matrix(g, {}, config, 0.0));
  return out;
}

// CRS reference: candidates are always the whole dataset (the brute-force
// closed-ball query); output ordered by cdp_id like run_crs.
inline std::vector<SemblanceMatrix> run_reference_crs(
    const Dataset& dataset, const ScanConfig& config, double apm) {
  std::vector<const CdpGather*> all;
  all.reserve(dataset.gathers.size());
  for (const CdpGather& g : dataset.gathers) all.push_back(&g);
  std::sort(all.begin(), all.end(),
            [](const CdpGather* a, const CdpGather* b) {
              return a->cdp_id < b->cdp_id;
            });
  std::vector<SemblanceMatrix> out;
  out.reserve(all.size());
  for (const CdpGather* g : all)
    out.push_back(reference_matrix(*g, all, config, apm));
  return out;
}

// Cell-wise relative error against the reference, and pick disagreements.
// A pick mismatch is excused when the reference's top two semblances are
// within 1e-4 relative of each other.
inline ErrorReport compare(std::span<const SemblanceMatrix> run,
                           std::span<const SemblanceMatrix> ref) {
  if (run.size() != ref.size())
    throw parameter_error("compare: result counts differ");
  ErrorReport report;
  double err_sum = 0.0;
  for (std::size_t i = 0; i < run.size(); ++i) {
    const SemblanceMatrix& a = run[i];
    const SemblanceMatrix& b = ref[i];
    if (a.ns != b.ns || a.nc != b.nc || a.values.size() != b.values.size())
      throw parameter_error("compare: matrix shapes differ");
    for (std::size_t j = 0; j < a.values.size(); ++j) {
      const double rel =
          std::abs(static_cast<double>(a.values[j]) - b.values[j]) /
          std::max(std::abs(static_cast<double>(b.values[j])), 1e-12);
      report.max_rel_err = std::max(report.max_rel_err, rel);
      err_sum += rel;
      ++report.cells;
    }
    for (int k = 0; k < a.ns; ++k) {
      int run_c = 0, ref_c = 0;
      for (int c = 1; c < a.nc; ++c) {
        if (a.at(k, c) > a.at(k, run_c)) run_c = c;
        if (b.at(k, c) > b.at(k, ref_c)) ref_c = c;
      }
      if (run_c == ref_c) continue;
      float top = 0.0f, second = 0.0f;
      for (int c = 0; c < b.nc; ++c) {
        const float s = b.at(k, c);
        if (s > top) {
          second = top;
          top = s;
        } else if (s > second) {
          second = s;
        }
      }
      const double gap = std::abs(static_cast<double>(top) - second) /
                         std::max(std::abs(static_cast<double>(top)), 1e-12);
      if (gap < 1e-4)
        ++report.tie_excused;
      else
        ++report.argmax_mismatches;
    }
  }
  if (report.cells > 0)
    report.mean_rel_err = err_sum / static_cast<double>(report.cells);
  return report;
}

}  // namespace oracle
}  // namespace velan
