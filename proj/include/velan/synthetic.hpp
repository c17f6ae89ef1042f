#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "velan/error.hpp"
#include "velan/traveltime.hpp"
#include "velan/types.hpp"

namespace velan {

// One planted reflector: zero-offset two-way time, stacking velocity and
// peak amplitude.
struct ReflectorEvent {
  double t0 = 0.0;      // seconds
  float velocity = 0.0f;  // m/s
  float amplitude = 1.0f;
};

struct GenParams {
  int ncdps = 1;
  int fold = 60;
  int ns = 550;
  std::uint32_t dt_us = 220;
  std::vector<ReflectorEvent> events;
  std::uint64_t seed = 0;
  double snr = 0.0;           // peak amplitude / noise sigma; 0 = noiseless
  double wavelet_freq = 25.0;  // Ricker peak frequency, Hz
  double max_offset = 200.0;   // largest source-receiver offset, meters
  double cdp_spacing = 25.0;   // midpoint grid spacing, meters
};

inline double ricker(double tau, double freq) {
  const double a = M_PI * freq * tau;
  const double a2 = a * a;
  return (1.0 - 2.0 * a2) * std::exp(-a2);
}

namespace detail {

// Box-Muller over mt19937_64, spelled out so the sample stream is the same
// on every standard library.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 =
        (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace detail

// Synthetic dataset with the requested shape: midpoints on a near-square
// grid, traces spread over [0, max_offset], and one Ricker wavelet per
// reflector centered at that trace's hyperbolic traveltime. Pure function
// of its arguments, including the seed.
inline Dataset generate_synthetic(const GenParams& p) {
  if (p.ncdps < 1 || p.fold < 1 || p.ns < 2)
    throw parameter_error("generate_synthetic: need ncdps>=1, fold>=1, ns>=2");
  if (p.dt_us == 0) throw parameter_error("generate_synthetic: dt must be > 0");
  if (p.wavelet_freq <= 0.0)
    throw parameter_error("generate_synthetic: wavelet_freq must be > 0");
  if (p.snr < 0.0) throw parameter_error("generate_synthetic: snr must be >= 0");
  const double dt_s = static_cast<double>(p.dt_us) * 1e-6;
  const double t_max = static_cast<double>(p.ns) * dt_s;
  float peak = 0.0f;
  for (const ReflectorEvent& e : p.events) {
    if (e.t0 < 0.0 || e.t0 > t_max)
      throw parameter_error("generate_synthetic: event time beyond ns*dt");
    if (!(e.velocity > 0.0f))
      throw parameter_error("generate_synthetic: event velocity must be > 0");
    peak = std::max(peak, std::abs(e.amplitude));
  }

  detail::GaussianRng noise(p.seed);
  const float sigma = p.snr > 0.0 ? static_cast<float>(peak / p.snr) : 0.0f;
  const int grid_nx =
      static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p.ncdps))));
  const double support = 4.0 / p.wavelet_freq;  // beyond this the wavelet
                                                // underflows float

  Dataset ds;
  ds.fold = static_cast<std::uint32_t>(p.fold);
  ds.gathers.reserve(p.ncdps);
  for (int i = 0; i < p.ncdps; ++i) {
    CdpGather g;
    g.cdp_id = static_cast<std::uint32_t>(i);
    g.ns = static_cast<std::uint32_t>(p.ns);
    g.dt_us = p.dt_us;
    const float mx = static_cast<float>((i % grid_nx) * p.cdp_spacing);
    const float my = static_cast<float>((i / grid_nx) * p.cdp_spacing);
    g.traces.resize(p.fold);
    for (int m = 0; m < p.fold; ++m) {
      Trace& tr = g.traces[m];
      const float half =
          p.fold == 1 ? 0.0f
                      : static_cast<float>(0.5 * p.max_offset * m /
                                           (p.fold - 1));
      tr.sx = mx - half;
      tr.sy = my;
      tr.gx = mx + half;
      tr.gy = my;
      const float h2 = half * half;
      tr.samples.assign(p.ns, 0.0f);
      for (const ReflectorEvent& e : p.events) {
        const float t_event =
            nmo_traveltime(static_cast<float>(e.t0), h2, e.velocity);
        const int lo = std::max(
            0, static_cast<int>(std::floor((t_event - support) / dt_s)));
        const int hi = std::min(
            p.ns, static_cast<int>(std::ceil((t_event + support) / dt_s)) + 1);
        for (int s = lo; s < hi; ++s) {
          const double tau = s * dt_s - static_cast<double>(t_event);
          tr.samples[s] += static_cast<float>(
              e.amplitude * ricker(tau, p.wavelet_freq));
        }
      }
      if (sigma > 0.0f)
        for (float& s : tr.samples)
          s += sigma * static_cast<float>(noise.next());
    }
    ds.gathers.push_back(std::move(g));
  }

  nlohmann::json meta;
  meta["generator"] = "velan synthetic";
  meta["seed"] = p.seed;
  meta["snr"] = p.snr;
  meta["wavelet_freq"] = p.wavelet_freq;
  meta["max_offset"] = p.max_offset;
  meta["cdp_spacing"] = p.cdp_spacing;
  nlohmann::json events = nlohmann::json::array();
  for (const ReflectorEvent& e : p.events)
    events.push_back({{"t0", e.t0},
                      {"velocity", e.velocity},
                      {"amplitude", e.amplitude}});
  meta["events"] = events;
  ds.metadata_json = meta.dump();
  return ds;
}

// Planted reflectors recorded in a dataset's metadata; empty when the
// dataset is not synthetic.
inline std::vector<ReflectorEvent> planted_events(const Dataset& ds) {
  std::vector<ReflectorEvent> events;
  if (ds.metadata_json.empty()) return events;
  const nlohmann::json meta =
      nlohmann::json::parse(ds.metadata_json, nullptr, false);
  if (meta.is_discarded() || !meta.contains("events")) return events;
  for (const nlohmann::json& e : meta["events"])
    events.push_back(ReflectorEvent{e.value("t0", 0.0),
                                    e.value("velocity", 0.0f),
                                    e.value("amplitude", 1.0f)});
  return events;
}

}  // namespace velan
