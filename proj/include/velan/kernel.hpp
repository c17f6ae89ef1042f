#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "velan/error.hpp"
#include "velan/trace_cache.hpp"
#include "velan/traveltime.hpp"
#include "velan/types.hpp"

namespace velan {

// One point of the search grid: zero-offset time t0 (seconds) and trial
// velocity v (m/s).
struct PairRequest {
  float t0 = 0.0f;
  float v = 0.0f;
};

// Running sums for one (sample, velocity) pair over a trace sweep:
// num[j] = sum over traces of the window value at position j,
// den    = sum of squared window values over all positions and traces,
// ac_linear = plain sum of window values, m_used = traces with valid hits.
struct PairAccumulator {
  std::vector<float> num;
  float den = 0.0f;
  float ac_linear = 0.0f;
  int m_used = 0;
};

struct SemblanceResult {
  float semblance = 0.0f;
  float stack = 0.0f;
  int m_used = 0;
};

inline float interpolate(float a, float b, float x) { return (b - a) * x + a; }

// Semblance from the accumulated sums. A dead window (den == 0) yields 0,
// never NaN.
inline SemblanceResult finalize(const PairAccumulator& acc) {
  SemblanceResult r;
  r.m_used = acc.m_used;
  if (acc.den > 0.0f) {
    float sum_sq = 0.0f;
    for (float n : acc.num) sum_sq += n * n;
    r.semblance = sum_sq / acc.den;
  }
  const int w = static_cast<int>(acc.num.size());
  if (acc.m_used > 0)
    r.stack = acc.ac_linear / (static_cast<float>(acc.m_used) *
                               static_cast<float>(w));
  return r;
}

// The ordered trace sequence one semblance evaluation walks: the central
// gather first, then each neighbor gather with its squared midpoint
// displacement d2. CMP sweeps are the single-leg, d2 = 0 case.
struct TraceSweep {
  struct Leg {
    const CdpGather* gather = nullptr;
    float d2 = 0.0f;
  };

  int ns = 0;
  double dt_s = 0.0;
  int total_traces = 0;
  std::vector<Leg> legs;
  std::vector<Halfpoint> halfpoints;  // concatenated in sweep order

  static TraceSweep single(const CdpGather& gather) {
    TraceSweep s;
    s.init_central(gather);
    return s;
  }

  // Neighbors contribute with d2 = squared distance of their midpoint from
  // `center`. Callers pass them already ordered (by cdp_id).
  static TraceSweep with_neighbors(
      const CdpGather& central,
      std::span<const CdpGather* const> neighbors, const Midpoint& center) {
    TraceSweep s;
    s.init_central(central);
    for (const CdpGather* g : neighbors) {
      if (g->ns != central.ns)
        throw parameter_error("TraceSweep: neighbor ns differs from central");
      if (g->traces.empty()) continue;
      const Midpoint m = midpoint_of(*g);
      const float dx = m.mx - center.mx;
      const float dy = m.my - center.my;
      s.append_leg(*g, dx * dx + dy * dy);
    }
    return s;
  }

 private:
  void init_central(const CdpGather& gather) {
    if (gather.traces.empty())
      throw parameter_error("TraceSweep: central gather has no traces");
    ns = static_cast<int>(gather.ns);
    dt_s = gather.dt_seconds();
    append_leg(gather, 0.0f);
  }

  void append_leg(const CdpGather& gather, float d2) {
    legs.push_back(Leg{&gather, d2});
    const std::vector<Halfpoint> hps = compute_halfpoints(gather);
    halfpoints.insert(halfpoints.end(), hps.begin(), hps.end());
    total_traces += static_cast<int>(gather.traces.size());
  }
};

namespace detail {

inline int padded_window(int w, int lanes) {
  return ((w + lanes - 1) / lanes) * lanes;
}

}  // namespace detail

// Scratch for a tile of pairs processed in one trace sweep. Reused across
// tiles so the hot loop never allocates. Scalar mode keeps den/ac_linear as
// single floats per pair; vector mode keeps them as lane partial sums that
// get folded on extraction: one set of lanes for the full lane groups of
// the window, one for the trailing partial group whose padded positions are
// dropped at the fold.
class TileAccumulators {
 public:
  void reset_scalar(int n_pairs, int w) {
    n_ = n_pairs;
    w_ = w;
    wp_ = w;
    lanes_ = 0;
    vectorized_ = false;
    num_.assign(static_cast<std::size_t>(n_) * wp_, 0.0f);
    den_.assign(n_, 0.0f);
    ac_.assign(n_, 0.0f);
    m_used_.assign(n_, 0);
    hits_.resize(n_);
  }

  void reset_vector(int n_pairs, int w, int lanes) {
    n_ = n_pairs;
    w_ = w;
    lanes_ = lanes;
    wp_ = detail::padded_window(w, lanes);
    vectorized_ = true;
    num_.assign(static_cast<std::size_t>(n_) * wp_, 0.0f);
    den_body_.assign(static_cast<std::size_t>(n_) * lanes_, 0.0f);
    den_tail_.assign(static_cast<std::size_t>(n_) * lanes_, 0.0f);
    ac_body_.assign(static_cast<std::size_t>(n_) * lanes_, 0.0f);
    ac_tail_.assign(static_cast<std::size_t>(n_) * lanes_, 0.0f);
    m_used_.assign(n_, 0);
    hits_.resize(n_);
    vals_.resize(wp_);
  }

  int size() const { return n_; }
  int window() const { return w_; }
  int padded() const { return wp_; }

  float* num_row(int i) { return num_.data() + static_cast<std::size_t>(i) * wp_; }
  const float* num_row(int i) const {
    return num_.data() + static_cast<std::size_t>(i) * wp_;
  }

  std::span<CurveHit> hits() { return hits_; }
  std::span<float> vals() { return vals_; }

  float& den(int i) { return den_[i]; }
  float& ac(int i) { return ac_[i]; }
  float* den_body(int i) {
    return den_body_.data() + static_cast<std::size_t>(i) * lanes_;
  }
  float* den_tail(int i) {
    return den_tail_.data() + static_cast<std::size_t>(i) * lanes_;
  }
  float* ac_body(int i) {
    return ac_body_.data() + static_cast<std::size_t>(i) * lanes_;
  }
  float* ac_tail(int i) {
    return ac_tail_.data() + static_cast<std::size_t>(i) * lanes_;
  }
  int& m_used(int i) { return m_used_[i]; }

  // Fold lane partials (when vectorized) into a plain accumulator. Only the
  // first w positions of num are kept; tail lanes beyond the window's
  // remainder never enter the fold, so padded slots cannot contribute.
  PairAccumulator extract(int i) const {
    PairAccumulator acc;
    const float* nr = num_row(i);
    acc.num.assign(nr, nr + w_);
    acc.m_used = m_used_[i];
    if (!vectorized_) {
      acc.den = den_[i];
      acc.ac_linear = ac_[i];
      return acc;
    }
    const int rem = w_ % lanes_;
    const int full = w_ / lanes_;
    float den = 0.0f;
    float ac = 0.0f;
    if (full > 0) {
      const float* db = den_body_.data() + static_cast<std::size_t>(i) * lanes_;
      const float* ab = ac_body_.data() + static_cast<std::size_t>(i) * lanes_;
      for (int l = 0; l < lanes_; ++l) {
        den += db[l];
        ac += ab[l];
      }
    }
    if (rem > 0) {
      const float* dt = den_tail_.data() + static_cast<std::size_t>(i) * lanes_;
      const float* at = ac_tail_.data() + static_cast<std::size_t>(i) * lanes_;
      for (int l = 0; l < rem; ++l) {
        den += dt[l];
        ac += at[l];
      }
    }
    acc.den = den;
    acc.ac_linear = ac;
    return acc;
  }

  SemblanceResult result(int i) const { return finalize(extract(i)); }

 private:
  int n_ = 0;
  int w_ = 0;
  int wp_ = 0;
  int lanes_ = 0;
  bool vectorized_ = false;
  std::vector<float> num_;
  std::vector<float> den_, ac_;
  std::vector<float> den_body_, den_tail_, ac_body_, ac_tail_;
  std::vector<int> m_used_;
  std::vector<CurveHit> hits_;
  std::vector<float> vals_;
};

// One (sample, velocity) pair swept over all traces, one window fetch per
// intersection. The reference ordering every other kernel must reproduce.
inline PairAccumulator scan_pair_baseline(const TraceSweep& sweep,
                                          PairRequest pair, int w,
                                          TraceCache& cache) {
  if (w < 1) throw parameter_error("scan_pair_baseline: w must be >= 1");
  PairAccumulator acc;
  acc.num.assign(w, 0.0f);
  int t = 0;
  for (const TraceSweep::Leg& leg : sweep.legs) {
    for (const Trace& trace : leg.gather->traces) {
      const Halfpoint hp = cache.halfpoint_for(t, sweep.halfpoints);
      ++t;
      const float time = crs_traveltime(pair.t0, hp.h2, leg.d2, pair.v);
      const CurveHit hit = hit_for(time, sweep.dt_s, sweep.ns, w);
      if (!hit.valid) continue;
      const FetchView view = cache.fetch_window(trace.samples, hit, w);
      const float* s = view.abs(hit.k1);
      for (int j = 0; j < w; ++j) {
        const float v = interpolate(s[j], s[j + 1], hit.x);
        acc.num[j] += v;
        acc.den += v * v;
        acc.ac_linear += v;
      }
      ++acc.m_used;
    }
  }
  return acc;
}

// Re-designed sweep: all pairs of a tile advance through the traces
// together, so each trace costs one coalesced range fetch instead of one
// window fetch per pair. Per-position accumulation order matches the
// baseline bit for bit.
inline void scan_tile_blocked(const TraceSweep& sweep,
                              std::span<const PairRequest> pairs, int w,
                              TraceCache& cache, TileAccumulators& acc) {
  if (w < 1) throw parameter_error("scan_tile_blocked: w must be >= 1");
  if (pairs.empty()) throw parameter_error("scan_tile_blocked: empty tile");
  const int n = static_cast<int>(pairs.size());
  acc.reset_scalar(n, w);
  std::span<CurveHit> hits = acc.hits();
  int t = 0;
  for (const TraceSweep::Leg& leg : sweep.legs) {
    for (const Trace& trace : leg.gather->traces) {
      const Halfpoint hp = cache.halfpoint_for(t, sweep.halfpoints);
      ++t;
      for (int i = 0; i < n; ++i) {
        const float time = crs_traveltime(pairs[i].t0, hp.h2, leg.d2,
                                          pairs[i].v);
        hits[i] = hit_for(time, sweep.dt_s, sweep.ns, w);
      }
      const std::optional<FetchPlan> plan = cache.plan_fetch(hits, w);
      if (!plan) continue;
      const FetchView view = cache.fetch_range(trace.samples, *plan);
      for (int i = 0; i < n; ++i) {
        if (!hits[i].valid) continue;
        const float* s = view.abs(hits[i].k1);
        const float x = hits[i].x;
        float* num = acc.num_row(i);
        float den = acc.den(i);
        float ac = acc.ac(i);
        for (int j = 0; j < w; ++j) {
          const float v = interpolate(s[j], s[j + 1], x);
          num[j] += v;
          den += v * v;
          ac += v;
        }
        acc.den(i) = den;
        acc.ac(i) = ac;
        ++acc.m_used(i);
      }
    }
  }
}

namespace detail {

template <int L>
inline void scan_tile_vectorized_impl(const TraceSweep& sweep,
                                      std::span<const PairRequest> pairs,
                                      int w, TraceCache& cache,
                                      TileAccumulators& acc,
                                      std::optional<float> pad_override) {
  const int n = static_cast<int>(pairs.size());
  acc.reset_vector(n, w, L);
  const int wp = acc.padded();
  const int full = w / L;
  const bool has_tail = w % L != 0;
  std::span<CurveHit> hits = acc.hits();
  std::span<float> vals = acc.vals();
  int t = 0;
  for (const TraceSweep::Leg& leg : sweep.legs) {
    for (const Trace& trace : leg.gather->traces) {
      const Halfpoint hp = cache.halfpoint_for(t, sweep.halfpoints);
      ++t;
      for (int i = 0; i < n; ++i) {
        const float time = crs_traveltime(pairs[i].t0, hp.h2, leg.d2,
                                          pairs[i].v);
        hits[i] = hit_for(time, sweep.dt_s, sweep.ns, w);
      }
      const std::optional<FetchPlan> plan = cache.plan_fetch(hits, w);
      if (!plan) continue;
      const FetchView view = cache.fetch_range(trace.samples, *plan);
      for (int i = 0; i < n; ++i) {
        if (!hits[i].valid) continue;
        const float* s = view.abs(hits[i].k1);
        const float x = hits[i].x;
        for (int j = 0; j < w; ++j)
          vals[j] = interpolate(s[j], s[j + 1], x);
        const float pad = pad_override ? *pad_override : vals[w - 1];
        for (int j = w; j < wp; ++j) vals[j] = pad;

        float* num = acc.num_row(i);
        for (int j = 0; j < wp; ++j) num[j] += vals[j];

        if (full > 0) {
          float* db = acc.den_body(i);
          float* ab = acc.ac_body(i);
          for (int g = 0; g < full; ++g) {
            const float* vg = vals.data() + g * L;
            for (int l = 0; l < L; ++l) {
              db[l] += vg[l] * vg[l];
              ab[l] += vg[l];
            }
          }
        }
        if (has_tail) {
          const float* vg = vals.data() + full * L;
          float* dt = acc.den_tail(i);
          float* at = acc.ac_tail(i);
          for (int l = 0; l < L; ++l) {
            dt[l] += vg[l] * vg[l];
            at[l] += vg[l];
          }
        }
        ++acc.m_used(i);
      }
    }
  }
}

}  // namespace detail

// Lane-padded variant of the blocked sweep: num is updated with ceil(w/L)
// element-wise lane operations over zero-padded storage, den/ac_linear as
// lane partial sums. Positions past the window carry a replicated value (or
// pad_override, for tests) and are excluded when the lanes are folded.
inline void scan_tile_vectorized(const TraceSweep& sweep,
                                 std::span<const PairRequest> pairs, int w,
                                 int lanes, TraceCache& cache,
                                 TileAccumulators& acc,
                                 std::optional<float> pad_override = {}) {
  if (w < 1) throw parameter_error("scan_tile_vectorized: w must be >= 1");
  if (pairs.empty()) throw parameter_error("scan_tile_vectorized: empty tile");
  switch (lanes) {
    case 4:
      detail::scan_tile_vectorized_impl<4>(sweep, pairs, w, cache, acc,
                                           pad_override);
      break;
    case 8:
      detail::scan_tile_vectorized_impl<8>(sweep, pairs, w, cache, acc,
                                           pad_override);
      break;
    default:
      throw parameter_error("scan_tile_vectorized: lane width must be 4 or 8");
  }
}

}  // namespace velan
