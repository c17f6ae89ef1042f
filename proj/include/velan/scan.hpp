#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "velan/error.hpp"
#include "velan/kernel.hpp"
#include "velan/trace_cache.hpp"
#include "velan/traveltime.hpp"

namespace velan {

enum class KernelVariant { baseline, blocked, vectorized };

inline const char* to_string(KernelVariant v) {
  switch (v) {
    case KernelVariant::baseline: return "baseline";
    case KernelVariant::blocked: return "blocked";
    case KernelVariant::vectorized: return "simd";
  }
  return "?";
}

// The (sample x velocity) search grid and every kernel knob. tile_size = 0
// derives the tile from the scratch budget.
struct ScanConfig {
  float vmin = 2000.0f;
  float vmax = 3000.0f;
  int nc = 101;
  int w = 4;                              // window length, samples
  int tile_size = 0;                      // pairs per sweep; 0 = auto
  int lane_width = 4;
  KernelVariant kernel_variant = KernelVariant::blocked;
  int size_h = TraceCache::kDefaultSizeH;
  std::size_t scratch_budget = 64 * 1024;  // bytes per worker
  int range_cap = TraceCache::kDefaultRangeCap;

  VelocityGrid grid() const { return VelocityGrid(vmin, vmax, nc); }

  // Scratch bytes one pair occupies during a tile sweep: its num storage
  // (lane-padded when vectorized), den/ac accumulators, and hit scratch.
  std::size_t bytes_per_pair() const {
    const std::size_t hit_scratch = sizeof(CurveHit) + sizeof(int);
    if (kernel_variant == KernelVariant::vectorized) {
      const int wp = detail::padded_window(w, lane_width);
      return sizeof(float) * (static_cast<std::size_t>(wp) + 4 * lane_width) +
             hit_scratch;
    }
    return sizeof(float) * (static_cast<std::size_t>(w) + 2) + hit_scratch;
  }

  int effective_tile_size() const {
    const std::size_t bpp = bytes_per_pair();
    const int budget_tile = static_cast<int>(
        scratch_budget / (bpp == 0 ? 1 : bpp));
    if (tile_size > 0) return tile_size;
    return budget_tile < 1 ? 1 : budget_tile;
  }

  void validate() const {
    if (w < 1) throw config_error("ScanConfig: w must be >= 1");
    if (nc < 1) throw config_error("ScanConfig: nc must be >= 1");
    if (!(vmin > 0.0f) || !(vmax >= vmin))
      throw config_error("ScanConfig: need 0 < vmin <= vmax");
    if (lane_width != 4 && lane_width != 8)
      throw config_error("ScanConfig: lane width must be 4 or 8");
    if (size_h < 1) throw config_error("ScanConfig: size_h must be >= 1");
    if (range_cap < 1) throw config_error("ScanConfig: range_cap must be >= 1");
    if (tile_size < 0) throw config_error("ScanConfig: tile_size must be >= 0");
    if (tile_size > 0 &&
        static_cast<std::size_t>(tile_size) * bytes_per_pair() >
            scratch_budget)
      throw config_error(
          "ScanConfig: tile_size " + std::to_string(tile_size) +
          " exceeds scratch budget (" + std::to_string(bytes_per_pair()) +
          " bytes/pair, budget " + std::to_string(scratch_budget) + ")");
  }
};

struct BestPick {
  float velocity = 0.0f;
  float semblance = 0.0f;
};

// Per-CDP scan output: the ns x nc semblance matrix (sample-major), the
// best-velocity pick per sample (lowest velocity index wins exact ties) and
// the stacked amplitude at that pick.
struct SemblanceMatrix {
  std::uint32_t cdp_id = 0;
  int ns = 0;
  int nc = 0;
  std::vector<float> values;      // ns * nc
  std::vector<BestPick> best_velocity;
  std::vector<float> stack_trace;

  float at(int k, int c) const {
    return values[static_cast<std::size_t>(k) * nc + c];
  }
  float& at(int k, int c) {
    return values[static_cast<std::size_t>(k) * nc + c];
  }
};

// Grid scan of one trace sweep: all ns*nc pairs in row-major order (sample
// major), tiled into groups of at most tile_size, each tile dispatched to
// the configured kernel variant.
inline SemblanceMatrix scan_sweep(const TraceSweep& sweep,
                                  std::uint32_t cdp_id,
                                  const ScanConfig& config,
                                  TraceCache& cache) {
  config.validate();
  if (sweep.ns <= config.w + 1)
    throw config_error("scan_sweep: window does not fit trace length");
  const VelocityGrid grid = config.grid();
  const int ns = sweep.ns;
  const int nc = config.nc;
  const int tile = config.effective_tile_size();

  SemblanceMatrix out;
  out.cdp_id = cdp_id;
  out.ns = ns;
  out.nc = nc;
  out.values.resize(static_cast<std::size_t>(ns) * nc);
  out.best_velocity.resize(ns);
  out.stack_trace.assign(ns, 0.0f);

  std::vector<float> stacks(static_cast<std::size_t>(ns) * nc);

  std::vector<PairRequest> pairs;
  pairs.reserve(static_cast<std::size_t>(ns) * nc);
  for (int k = 0; k < ns; ++k) {
    const float t0 = static_cast<float>(k * sweep.dt_s);
    for (int c = 0; c < nc; ++c)
      pairs.push_back(PairRequest{t0, grid.value(c)});
  }

  TileAccumulators acc;
  const std::size_t total = pairs.size();
  for (std::size_t begin = 0; begin < total; begin += tile) {
    const std::size_t count = std::min<std::size_t>(tile, total - begin);
    const std::span<const PairRequest> tile_pairs(pairs.data() + begin, count);
    switch (config.kernel_variant) {
      case KernelVariant::baseline:
        for (std::size_t i = 0; i < count; ++i) {
          const SemblanceResult r = finalize(
              scan_pair_baseline(sweep, tile_pairs[i], config.w, cache));
          out.values[begin + i] = r.semblance;
          stacks[begin + i] = r.stack;
        }
        continue;
      case KernelVariant::blocked:
        scan_tile_blocked(sweep, tile_pairs, config.w, cache, acc);
        break;
      case KernelVariant::vectorized:
        scan_tile_vectorized(sweep, tile_pairs, config.w, config.lane_width,
                             cache, acc);
        break;
    }
    for (std::size_t i = 0; i < count; ++i) {
      const SemblanceResult r = acc.result(static_cast<int>(i));
      out.values[begin + i] = r.semblance;
      stacks[begin + i] = r.stack;
    }
  }

  for (int k = 0; k < ns; ++k) {
    int best_c = 0;
    float best_s = out.at(k, 0);
    for (int c = 1; c < nc; ++c) {
      const float s = out.at(k, c);
      if (s > best_s) {
        best_s = s;
        best_c = c;
      }
    }
    out.best_velocity[k] = BestPick{grid.value(best_c), best_s};
    out.stack_trace[k] = stacks[static_cast<std::size_t>(k) * nc + best_c];
  }
  return out;
}

}  // namespace velan
