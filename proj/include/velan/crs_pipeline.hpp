#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "velan/cmp_pipeline.hpp"
#include "velan/error.hpp"
#include "velan/scan.hpp"
#include "velan/types.hpp"

namespace velan {

struct GridDims {
  int gx = 1;
  int gy = 1;
  int count() const { return gx * gy; }
};

enum class Direction { north, south, east, west };

inline const char* to_string(Direction d) {
  switch (d) {
    case Direction::north: return "north";
    case Direction::south: return "south";
    case Direction::east: return "east";
    case Direction::west: return "west";
  }
  return "?";
}

enum class RegionTag { inner, outer };

// 2D partition of the midpoint bounding box into gx * gy shards. apm is the
// CRS neighborhood radius; each axis that is actually split must satisfy
// apm <= cell edge / 2 so a neighborhood never spans non-adjacent shards.
struct ShardPlan {
  GridDims dims;
  double min_x = 0.0, min_y = 0.0;
  double cell_w = 0.0, cell_h = 0.0;
  double apm = 0.0;

  int shard_of(int ix, int iy) const { return iy * dims.gx + ix; }
  int ix_of(int shard) const { return shard % dims.gx; }
  int iy_of(int shard) const { return shard / dims.gx; }

  struct Rect {
    double x0, y0, x1, y1;
  };
  Rect cell_bounds(int shard) const {
    const int ix = ix_of(shard);
    const int iy = iy_of(shard);
    return Rect{min_x + ix * cell_w, min_y + iy * cell_h,
                min_x + (ix + 1) * cell_w, min_y + (iy + 1) * cell_h};
  }
};

struct CrsPartition {
  ShardPlan plan;
  std::vector<Midpoint> midpoints;              // per gather index
  std::vector<int> shard;                       // per gather index
  std::vector<RegionTag> tags;                  // per gather index
  std::vector<std::vector<std::uint32_t>> shard_cdps;  // gather indices
};

namespace detail {

// Cell index along one axis; a midpoint exactly on an interior edge goes to
// the lower cell.
inline int cell_index(double v, double lo, double cell, int n) {
  if (n == 1 || cell <= 0.0) return 0;
  const double rel = v - lo;
  int i = static_cast<int>(std::floor(rel / cell));
  if (i >= n) i = n - 1;
  if (i < 0) i = 0;
  if (i > 0 && rel == cell * i) --i;
  return i;
}

}  // namespace detail

// Assign every CDP to the shard holding its midpoint and tag CDPs within
// apm of a shared shard edge as outer.
inline CrsPartition partition(const Dataset& dataset, GridDims dims,
                              double apm) {
  if (dims.gx < 1 || dims.gy < 1)
    throw config_error("partition: grid dims must be >= 1");
  if (!(apm > 0.0)) throw config_error("partition: apm must be > 0");
  if (dataset.gathers.empty())
    throw parameter_error("partition: dataset has no CDPs");

  CrsPartition part;
  part.midpoints.reserve(dataset.gathers.size());
  double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
  bool first = true;
  for (const CdpGather& g : dataset.gathers) {
    const Midpoint m = midpoint_of(g);
    if (!std::isfinite(m.mx) || !std::isfinite(m.my))
      throw parameter_error("partition: non-finite midpoint for cdp " +
                            std::to_string(g.cdp_id));
    if (first) {
      min_x = max_x = m.mx;
      min_y = max_y = m.my;
      first = false;
    } else {
      min_x = std::min<double>(min_x, m.mx);
      max_x = std::max<double>(max_x, m.mx);
      min_y = std::min<double>(min_y, m.my);
      max_y = std::max<double>(max_y, m.my);
    }
    part.midpoints.push_back(m);
  }

  ShardPlan& plan = part.plan;
  plan.dims = dims;
  plan.min_x = min_x;
  plan.min_y = min_y;
  plan.cell_w = dims.gx > 1 ? (max_x - min_x) / dims.gx : (max_x - min_x);
  plan.cell_h = dims.gy > 1 ? (max_y - min_y) / dims.gy : (max_y - min_y);
  plan.apm = apm;
  if (dims.gx > 1 && apm > plan.cell_w / 2.0)
    throw config_error("partition: apm " + std::to_string(apm) +
                       " exceeds half the shard width " +
                       std::to_string(plan.cell_w / 2.0));
  if (dims.gy > 1 && apm > plan.cell_h / 2.0)
    throw config_error("partition: apm " + std::to_string(apm) +
                       " exceeds half the shard height " +
                       std::to_string(plan.cell_h / 2.0));

  part.shard.resize(dataset.gathers.size());
  part.tags.resize(dataset.gathers.size());
  part.shard_cdps.assign(dims.count(), {});
  for (std::size_t i = 0; i < dataset.gathers.size(); ++i) {
    const Midpoint& m = part.midpoints[i];
    const int ix = detail::cell_index(m.mx, min_x, plan.cell_w, dims.gx);
    const int iy = detail::cell_index(m.my, min_y, plan.cell_h, dims.gy);
    const int s = plan.shard_of(ix, iy);
    part.shard[i] = s;
    part.shard_cdps[s].push_back(static_cast<std::uint32_t>(i));

    const ShardPlan::Rect r = plan.cell_bounds(s);
    bool outer = false;
    if (ix > 0 && m.mx - r.x0 <= apm) outer = true;
    if (ix < dims.gx - 1 && r.x1 - m.mx <= apm) outer = true;
    if (iy > 0 && m.my - r.y0 <= apm) outer = true;
    if (iy < dims.gy - 1 && r.y1 - m.my <= apm) outer = true;
    part.tags[i] = outer ? RegionTag::outer : RegionTag::inner;
  }
  return part;
}

// All candidates within the closed ball of radius apm around the central
// CDP's midpoint, excluding the central CDP itself, ordered by cdp_id.
inline std::vector<const CdpGather*> neighbors_of(
    const CdpGather& central, std::span<const CdpGather* const> candidates,
    double apm) {
  if (!(apm > 0.0)) throw parameter_error("neighbors_of: apm must be > 0");
  const Midpoint c = midpoint_of(central);
  std::vector<const CdpGather*> out;
  for (const CdpGather* g : candidates) {
    if (g == &central) continue;
    const Midpoint m = midpoint_of(*g);
    const double dx = m.mx - c.mx;
    const double dy = m.my - c.my;
    if (dx * dx + dy * dy <= apm * apm) out.push_back(g);
  }
  std::sort(out.begin(), out.end(),
            [](const CdpGather* a, const CdpGather* b) {
              return a->cdp_id < b->cdp_id;
            });
  return out;
}

// Identical to scan_cdp except the sweep covers the central traces plus all
// neighbor traces, each neighbor with its squared midpoint displacement.
inline SemblanceMatrix scan_central_cdp(
    const CdpGather& central, std::span<const CdpGather* const> neighbors,
    const ScanConfig& config, TraceCache& cache) {
  const TraceSweep sweep =
      TraceSweep::with_neighbors(central, neighbors, midpoint_of(central));
  return scan_sweep(sweep, central.cdp_id, config, cache);
}

inline SemblanceMatrix scan_central_cdp(
    const CdpGather& central, std::span<const CdpGather* const> neighbors,
    const ScanConfig& config) {
  TraceCache cache(config.size_h, config.range_cap);
  return scan_central_cdp(central, neighbors, config, cache);
}

// The outer strip of one shard packed for a neighbor. Shards live in one
// process, so the payload is CDP indices into the shared dataset; a real
// transport would serialize the gathers here.
struct HaloMessage {
  int source_shard = -1;
  Direction direction = Direction::north;
  std::vector<std::uint32_t> cdp_indices;
};

// Run-shape instrumentation: message counts and the per-shard event order.
struct CrsRunInfo {
  enum class Event {
    send_posted,
    inner_compute_start,
    inner_compute_end,
    halo_received,
    outer_compute_start,
    outer_compute_end,
  };
  struct Shard {
    int sends_posted = 0;
    int receives_completed = 0;
    std::vector<Event> events;
  };
  std::vector<Shard> shards;
};

struct CrsOptions {
  int workers_per_shard = 1;
  std::chrono::milliseconds halo_timeout{30000};
};

namespace detail {

// One mailbox per (shard, incoming direction); senders never block.
class HaloChannels {
 public:
  explicit HaloChannels(int shard_count) : slots_(4 * shard_count) {}

  void send(int to_shard, Direction arriving_from, HaloMessage msg) {
    Slot& slot = slots_[index(to_shard, arriving_from)];
    {
      std::lock_guard<std::mutex> lock(slot.m);
      slot.msg = std::move(msg);
    }
    slot.cv.notify_one();
  }

  HaloMessage receive(int shard, Direction from,
                      std::chrono::milliseconds timeout) {
    Slot& slot = slots_[index(shard, from)];
    std::unique_lock<std::mutex> lock(slot.m);
    if (!slot.cv.wait_for(lock, timeout,
                          [&] { return slot.msg.has_value(); }))
      throw halo_timeout_error("halo receive timed out: shard " +
                               std::to_string(shard) + " awaiting its " +
                               to_string(from) + " neighbor");
    HaloMessage msg = std::move(*slot.msg);
    slot.msg.reset();
    return msg;
  }

 private:
  struct Slot {
    std::mutex m;
    std::condition_variable cv;
    std::optional<HaloMessage> msg;
  };
  std::vector<Slot> slots_;

  std::size_t index(int shard, Direction d) const {
    return static_cast<std::size_t>(shard) * 4 +
           static_cast<std::size_t>(d);
  }
};

}  // namespace detail

// Sharded CRS run. Each shard posts its east/west strips, computes its
// inner region while those are in flight, then forwards north/south strips
// together with the corner sub-strips of the halos it just received (the
// second hop that covers diagonal neighbors), and finally computes its
// outer region against the merged halo. Results are ordered by cdp_id and
// match a 1x1-grid run.
inline std::vector<SemblanceMatrix> run_crs(const Dataset& dataset,
                                            const ScanConfig& config,
                                            GridDims dims, double apm,
                                            const CrsOptions& options = {},
                                            CrsRunInfo* info = nullptr,
                                            CacheStats* stats_out = nullptr) {
  config.validate();
  if (options.workers_per_shard < 1)
    throw parameter_error("run_crs: workers_per_shard must be >= 1");
  if (dataset.gathers.empty()) return {};

  const CrsPartition part = partition(dataset, dims, apm);
  const int nshards = dims.count();
  detail::HaloChannels channels(nshards);
  std::vector<SemblanceMatrix> by_gather(dataset.gathers.size());
  std::vector<CrsRunInfo::Shard> shard_info(nshards);
  std::vector<CacheStats> shard_stats(nshards);
  std::vector<std::exception_ptr> shard_errors(nshards);

  auto shard_body = [&](int s) {
    CrsRunInfo::Shard& log = shard_info[s];
    const ShardPlan& plan = part.plan;
    const int ix = plan.ix_of(s);
    const int iy = plan.iy_of(s);
    const ShardPlan::Rect rect = plan.cell_bounds(s);
    const std::vector<std::uint32_t>& own = part.shard_cdps[s];

    auto neighbor_shard = [&](Direction d) -> int {
      switch (d) {
        case Direction::north:
          return iy + 1 < plan.dims.gy ? plan.shard_of(ix, iy + 1) : -1;
        case Direction::south:
          return iy > 0 ? plan.shard_of(ix, iy - 1) : -1;
        case Direction::east:
          return ix + 1 < plan.dims.gx ? plan.shard_of(ix + 1, iy) : -1;
        case Direction::west:
          return ix > 0 ? plan.shard_of(ix - 1, iy) : -1;
      }
      return -1;
    };
    auto edge_distance = [&](const Midpoint& m, Direction d) -> double {
      switch (d) {
        case Direction::north: return rect.y1 - m.my;
        case Direction::south: return m.my - rect.y0;
        case Direction::east: return rect.x1 - m.mx;
        case Direction::west: return m.mx - rect.x0;
      }
      return 0.0;
    };
    auto opposite = [](Direction d) {
      switch (d) {
        case Direction::north: return Direction::south;
        case Direction::south: return Direction::north;
        case Direction::east: return Direction::west;
        case Direction::west: return Direction::east;
      }
      return Direction::north;
    };
    auto strip_of = [&](Direction d) {
      std::vector<std::uint32_t> strip;
      for (std::uint32_t idx : own)
        if (std::abs(edge_distance(part.midpoints[idx], d)) <= apm)
          strip.push_back(idx);
      return strip;
    };
    auto post = [&](Direction d, std::vector<std::uint32_t> indices) {
      const int to = neighbor_shard(d);
      if (to >= 0)
        channels.send(to, opposite(d),
                      HaloMessage{s, d, std::move(indices)});
      ++log.sends_posted;  // null-neighbor sends count toward the protocol
      log.events.push_back(CrsRunInfo::Event::send_posted);
    };
    auto receive = [&](Direction d) -> std::vector<std::uint32_t> {
      std::vector<std::uint32_t> indices;
      const int from = neighbor_shard(d);
      if (from >= 0)
        indices = channels.receive(s, d, options.halo_timeout).cdp_indices;
      ++log.receives_completed;
      log.events.push_back(CrsRunInfo::Event::halo_received);
      return indices;
    };
    auto compute = [&](const std::vector<std::uint32_t>& cdps,
                       const std::vector<const CdpGather*>& candidates) {
      detail::parallel_for_indexed(
          cdps.size(), options.workers_per_shard, config.size_h,
          config.range_cap, &shard_stats[s],
          [&](std::size_t j, TraceCache& cache) {
            const CdpGather& central = dataset.gathers[cdps[j]];
            const std::vector<const CdpGather*> neighbors = neighbors_of(
                central, candidates, apm);
            by_gather[cdps[j]] =
                scan_central_cdp(central, neighbors, config, cache);
          });
    };

    // phase 1: east/west strips travel while the inner region computes
    post(Direction::east, strip_of(Direction::east));
    post(Direction::west, strip_of(Direction::west));

    std::vector<std::uint32_t> inner, outer;
    for (std::uint32_t idx : own)
      (part.tags[idx] == RegionTag::inner ? inner : outer).push_back(idx);

    std::vector<const CdpGather*> own_candidates;
    own_candidates.reserve(own.size());
    for (std::uint32_t idx : own)
      own_candidates.push_back(&dataset.gathers[idx]);

    log.events.push_back(CrsRunInfo::Event::inner_compute_start);
    compute(inner, own_candidates);
    log.events.push_back(CrsRunInfo::Event::inner_compute_end);

    std::vector<std::uint32_t> halo = receive(Direction::east);
    {
      const std::vector<std::uint32_t> w = receive(Direction::west);
      halo.insert(halo.end(), w.begin(), w.end());
    }

    // phase 2: north/south strips plus the corner sub-strips of the
    // east/west halo, which diagonal shards need
    for (const Direction d : {Direction::north, Direction::south}) {
      std::vector<std::uint32_t> strip = strip_of(d);
      for (std::uint32_t idx : halo)
        if (std::abs(edge_distance(part.midpoints[idx], d)) <= apm)
          strip.push_back(idx);
      post(d, std::move(strip));
    }
    {
      const std::vector<std::uint32_t> n = receive(Direction::north);
      halo.insert(halo.end(), n.begin(), n.end());
      const std::vector<std::uint32_t> sdir = receive(Direction::south);
      halo.insert(halo.end(), sdir.begin(), sdir.end());
    }

    std::vector<const CdpGather*> outer_candidates = own_candidates;
    for (std::uint32_t idx : halo)
      outer_candidates.push_back(&dataset.gathers[idx]);

    log.events.push_back(CrsRunInfo::Event::outer_compute_start);
    compute(outer, outer_candidates);
    log.events.push_back(CrsRunInfo::Event::outer_compute_end);
  };

  if (nshards == 1) {
    shard_body(0);
  } else {
    std::vector<std::thread> shards;
    shards.reserve(nshards);
    for (int s = 0; s < nshards; ++s)
      shards.emplace_back([&, s] {
        try {
          shard_body(s);
        } catch (...) {
          shard_errors[s] = std::current_exception();
        }
      });
    for (std::thread& t : shards) t.join();
    for (int s = 0; s < nshards; ++s)
      if (shard_errors[s]) std::rethrow_exception(shard_errors[s]);
  }

  if (info) info->shards = std::move(shard_info);
  if (stats_out)
    for (const CacheStats& s : shard_stats) stats_out->merge(s);

  std::vector<std::size_t> order(dataset.gathers.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const std::uint32_t ida = dataset.gathers[a].cdp_id;
    const std::uint32_t idb = dataset.gathers[b].cdp_id;
    return ida != idb ? ida < idb : a < b;
  });
  std::vector<SemblanceMatrix> results;
  results.reserve(order.size());
  for (std::size_t i : order) results.push_back(std::move(by_gather[i]));
  return results;
}

}  // namespace velan
