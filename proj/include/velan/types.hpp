#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "velan/error.hpp"

namespace velan {

// One seismic recording: 2D surface positions of source (sx, sy) and
// receiver (gx, gy) in meters, plus ns amplitude samples.
struct Trace {
  float sx = 0.0f;
  float sy = 0.0f;
  float gx = 0.0f;
  float gy = 0.0f;
  std::vector<float> samples;

  bool finite_coords() const {
    return std::isfinite(sx) && std::isfinite(sy) && std::isfinite(gx) &&
           std::isfinite(gy);
  }
};

// Ordered set of traces sharing a midpoint. Traces are stored contiguously
// and samples contiguously within a trace; all traces share ns.
struct CdpGather {
  std::uint32_t cdp_id = 0;
  std::uint32_t ns = 0;
  std::uint32_t dt_us = 0;  // sampling interval, microseconds
  std::vector<Trace> traces;

  double dt_seconds() const { return static_cast<double>(dt_us) * 1e-6; }
  std::uint32_t ntraces() const {
    return static_cast<std::uint32_t>(traces.size());
  }
};

struct Midpoint {
  float mx = 0.0f;
  float my = 0.0f;
};

struct Dataset {
  std::vector<CdpGather> gathers;
  std::uint32_t fold = 0;        // max traces per gather
  std::string metadata_json;     // raw JSON text, empty when absent

  std::uint32_t ncdps() const {
    return static_cast<std::uint32_t>(gathers.size());
  }
};

// Arithmetic mean of the first trace's source and receiver coordinates.
inline Midpoint midpoint_of(const CdpGather& gather) {
  if (gather.traces.empty())
    throw parameter_error("midpoint_of: gather has no traces");
  const Trace& t = gather.traces.front();
  return Midpoint{(t.sx + t.gx) * 0.5f, (t.sy + t.gy) * 0.5f};
}

}  // namespace velan
