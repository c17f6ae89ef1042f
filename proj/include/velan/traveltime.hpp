#pragma once

#include <cmath>
#include <vector>

#include "velan/error.hpp"
#include "velan/types.hpp"

namespace velan {

// Squared half-offset of one trace, meters².
struct Halfpoint {
  float h2 = 0.0f;
};

inline std::vector<Halfpoint> compute_halfpoints(const CdpGather& gather) {
  if (gather.traces.empty())
    throw parameter_error("compute_halfpoints: gather has no traces");
  std::vector<Halfpoint> hps;
  hps.reserve(gather.traces.size());
  for (const Trace& t : gather.traces) {
    const float dx = t.gx - t.sx;
    const float dy = t.gy - t.sy;
    hps.push_back(Halfpoint{(dx * dx + dy * dy) * 0.25f});
  }
  return hps;
}

// Linear scan grid of trial NMO velocities: vmin + c*(vmax-vmin)/(nc-1).
struct VelocityGrid {
  float vmin;
  float vmax;
  int nc;

  VelocityGrid(float vmin_, float vmax_, int nc_)
      : vmin(vmin_), vmax(vmax_), nc(nc_) {
    if (!(vmin > 0.0f) || !(vmax >= vmin))
      throw parameter_error("VelocityGrid: need 0 < vmin <= vmax");
    if (nc < 1) throw parameter_error("VelocityGrid: nc must be >= 1");
  }

  float value(int c) const {
    if (nc == 1) return vmin;
    return vmin + static_cast<float>(c) * (vmax - vmin) /
                      static_cast<float>(nc - 1);
  }
};

// Traveltime over the neighborhood surface: the squared effective offset is
// the trace's 4*h2 plus the squared midpoint displacement d2 from the
// central CDP. d2 = 0 degenerates to the plain NMO hyperbola bit-for-bit,
// which pipelines rely on.
inline float crs_traveltime(float t0, float h2, float d2, float v) {
  if (!(v > 0.0f)) throw parameter_error("crs_traveltime: v must be > 0");
  return std::sqrt(t0 * t0 + (4.0f * h2 + d2) / (v * v));
}

// Hyperbolic NMO: t = sqrt(t0^2 + 4*h2/v^2).
inline float nmo_traveltime(float t0, float h2, float v) {
  return crs_traveltime(t0, h2, 0.0f, v);
}

// Where a traveltime curve intersects a trace: base sample index k1 of the
// centered window and the interpolation fraction x in [0,1). Out-of-range
// intersections come back valid=false and contribute nothing downstream.
struct CurveHit {
  int k1 = 0;
  float x = 0.0f;
  bool valid = false;
};

inline CurveHit hit_for(float t, double dt_s, int ns, int w) {
  const double s = static_cast<double>(t) / dt_s;
  const double base = std::floor(s);
  const int k1 = static_cast<int>(base) - w / 2;
  const float x = static_cast<float>(s - base);
  // window samples k1..k1+w-1 plus the interpolation neighbor k1+w
  const bool valid = k1 >= 0 && k1 + w < ns;
  return CurveHit{k1, x, valid};
}

}  // namespace velan
