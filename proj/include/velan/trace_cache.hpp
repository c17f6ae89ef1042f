#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "velan/error.hpp"
#include "velan/traveltime.hpp"

namespace velan {

// Coalesced fetch covering every batched window: samples
// [min_la, max_lb + w] inclusive, i.e. each hit's w window samples plus its
// interpolation neighbor.
struct FetchPlan {
  int min_la = 0;
  int max_lb = 0;
  int length = 0;  // max_lb - min_la + w + 1
  int w = 0;
  int valid_hits = 0;
};

struct CacheStats {
  std::uint64_t range_fetches = 0;     // fetches actually issued
  std::uint64_t samples_fetched = 0;   // total samples those fetches moved
  std::uint64_t halfpoint_blocks = 0;  // halfpoint block refills
  std::uint64_t naive_fetches = 0;     // per-window fetches an unbatched
                                       // sweep would have issued (== number
                                       // of valid curve-trace intersections)

  void merge(const CacheStats& o) {
    range_fetches += o.range_fetches;
    samples_fetched += o.samples_fetched;
    halfpoint_blocks += o.halfpoint_blocks;
    naive_fetches += o.naive_fetches;
  }
};

// View into fetched samples. Absolute trace index k maps to data[k - base].
struct FetchView {
  const float* data = nullptr;
  int base = 0;
  int size = 0;

  const float* abs(int k) const { return data + (k - base); }
};

// In-memory stand-in for a scratchpad-resident software cache: merges the
// per-window requests of one trace sweep step into a single range fetch,
// serves halfpoints in blocks of size_h, and counts everything so the
// coalescing benefit is measurable. One instance per worker; instances are
// independent.
class TraceCache {
 public:
  static constexpr int kDefaultSizeH = 64;
  static constexpr int kDefaultRangeCap = 4096;

  explicit TraceCache(int size_h = kDefaultSizeH,
                      int range_cap = kDefaultRangeCap)
      : size_h_(size_h), range_cap_(range_cap) {
    if (size_h_ < 1) throw parameter_error("TraceCache: size_h must be >= 1");
    if (range_cap_ < 1)
      throw parameter_error("TraceCache: range_cap must be >= 1");
  }

  int size_h() const { return size_h_; }
  int range_cap() const { return range_cap_; }

  // Merged range over the valid hits of a batch; empty when none is valid.
  std::optional<FetchPlan> plan_fetch(std::span<const CurveHit> hits,
                                      int w) const {
    if (w < 1) throw parameter_error("plan_fetch: w must be >= 1");
    FetchPlan plan;
    plan.w = w;
    for (const CurveHit& h : hits) {
      if (!h.valid) continue;
      if (plan.valid_hits == 0) {
        plan.min_la = plan.max_lb = h.k1;
      } else {
        plan.min_la = std::min(plan.min_la, h.k1);
        plan.max_lb = std::max(plan.max_lb, h.k1);
      }
      ++plan.valid_hits;
    }
    if (plan.valid_hits == 0) return std::nullopt;
    plan.length = plan.max_lb - plan.min_la + w + 1;
    return plan;
  }

  // One coalesced fetch for the whole batch. Ranges longer than range_cap
  // fall back to per-hit accesses and are counted as such.
  FetchView fetch_range(std::span<const float> samples, const FetchPlan& plan) {
    if (plan.valid_hits < 1 || plan.length < 1)
      throw internal_error("fetch_range: empty plan");
    if (plan.min_la < 0 ||
        static_cast<std::size_t>(plan.min_la) +
                static_cast<std::size_t>(plan.length) >
            samples.size())
      throw internal_error("fetch_range: plan out of trace bounds");
    stats_.naive_fetches += static_cast<std::uint64_t>(plan.valid_hits);
    if (plan.length > range_cap_) {
      // as many fetches and samples as the unbatched sweep would move
      stats_.range_fetches += static_cast<std::uint64_t>(plan.valid_hits);
      stats_.samples_fetched +=
          static_cast<std::uint64_t>(plan.valid_hits) *
          static_cast<std::uint64_t>(plan.w + 1);
      return FetchView{samples.data(), 0, static_cast<int>(samples.size())};
    }
    stats_.range_fetches += 1;
    stats_.samples_fetched += static_cast<std::uint64_t>(plan.length);
    range_buf_.assign(samples.begin() + plan.min_la,
                      samples.begin() + plan.min_la + plan.length);
    return FetchView{range_buf_.data(), plan.min_la, plan.length};
  }

  // Unbatched path: one fetch of w+1 samples for a single hit.
  FetchView fetch_window(std::span<const float> samples, const CurveHit& hit,
                         int w) {
    if (!hit.valid) throw internal_error("fetch_window: invalid hit");
    if (hit.k1 < 0 ||
        static_cast<std::size_t>(hit.k1 + w + 1) > samples.size())
      throw internal_error("fetch_window: hit out of trace bounds");
    stats_.naive_fetches += 1;
    stats_.range_fetches += 1;
    stats_.samples_fetched += static_cast<std::uint64_t>(w + 1);
    window_buf_.assign(samples.begin() + hit.k1,
                       samples.begin() + hit.k1 + w + 1);
    return FetchView{window_buf_.data(), hit.k1, w + 1};
  }

  // Halfpoint of trace t, served from a block of size_h. Refills exactly on
  // block boundaries (t % size_h == 0), so a sweep of ntrace traces costs
  // ceil(ntrace / size_h) refills.
  Halfpoint halfpoint_for(int t, std::span<const Halfpoint> all) {
    if (t < 0 || static_cast<std::size_t>(t) >= all.size())
      throw parameter_error("halfpoint_for: trace index out of range");
    const bool boundary = t % size_h_ == 0;
    const bool miss = block_start_ < 0 || t < block_start_ ||
                      t >= block_start_ + static_cast<int>(hp_block_.size()) ||
                      block_source_ != all.data();
    if (boundary || miss) {
      const int start = t - t % size_h_;
      const int len =
          std::min<int>(size_h_, static_cast<int>(all.size()) - start);
      hp_block_.assign(all.begin() + start, all.begin() + start + len);
      block_start_ = start;
      block_source_ = all.data();
      stats_.halfpoint_blocks += 1;
    }
    return hp_block_[static_cast<std::size_t>(t - block_start_)];
  }

  const CacheStats& stats() const { return stats_; }
  void reset_stats() { stats_ = CacheStats{}; }

 private:
  int size_h_;
  int range_cap_;
  CacheStats stats_;
  std::vector<float> range_buf_;
  std::vector<float> window_buf_;
  std::vector<Halfpoint> hp_block_;
  int block_start_ = -1;
  const Halfpoint* block_source_ = nullptr;
};

}  // namespace velan
