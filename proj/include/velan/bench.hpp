#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "velan/cmp_pipeline.hpp"
#include "velan/crs_pipeline.hpp"
#include "velan/error.hpp"
#include "velan/scan.hpp"
#include "velan/trace_cache.hpp"

namespace velan {

inline nlohmann::json to_json(const CacheStats& s) {
  return {{"range_fetches", s.range_fetches},
          {"samples_fetched", s.samples_fetched},
          {"halfpoint_blocks", s.halfpoint_blocks},
          {"naive_fetches", s.naive_fetches}};
}

inline nlohmann::json to_json(const ScanConfig& c) {
  return {{"vmin", c.vmin},
          {"vmax", c.vmax},
          {"nc", c.nc},
          {"window", c.w},
          {"tile", c.effective_tile_size()},
          {"lanes", c.lane_width},
          {"kernel", to_string(c.kernel_variant)},
          {"size_h", c.size_h},
          {"scratch_budget", c.scratch_budget},
          {"range_cap", c.range_cap}};
}

struct RooflineInput {
  double tile = 0.0;
  double w = 0.0;
  double size_get = 0.0;  // samples per coalesced fetch
};

// The flop count per intersection (12 + 7w) and 4 bytes per sample are the
// model's given constants; overridable rather than asserted.
struct RooflineConstants {
  double flops_base = 12.0;
  double flops_per_w = 7.0;
  double bytes_per_sample = 4.0;
};

inline double operational_intensity(const RooflineInput& in,
                                    const RooflineConstants& k = {}) {
  if (!(in.tile > 0.0) || !(in.w > 0.0) || !(in.size_get > 0.0))
    throw parameter_error("operational_intensity: inputs must be positive");
  return in.tile * (k.flops_base + k.flops_per_w * in.w) /
         (in.size_get * k.bytes_per_sample);
}

enum class PipelineMode { cmp, crs };

// semblance_traces counts valid curve-trace intersections, which is exactly
// what the cache's naive-fetch counter tracks. Elapsed covers compute only;
// the warm-up run is discarded and the median of the repeats is reported.
struct BenchReport {
  PipelineMode mode = PipelineMode::cmp;
  std::uint64_t semblance_traces = 0;
  double elapsed_s = 0.0;
  double throughput = 0.0;  // semblance-trace/s
  int workers = 1;
  int repeats = 1;
  CacheStats stats;
  ScanConfig config;

  nlohmann::json to_json() const {
    return {{"mode", mode == PipelineMode::cmp ? "cmp" : "crs"},
            {"semblance_traces", semblance_traces},
            {"elapsed_s", elapsed_s},
            {"throughput", throughput},
            {"workers", workers},
            {"repeats", repeats},
            {"cache", velan::to_json(stats)},
            {"config", velan::to_json(config)}};
  }
};

inline BenchReport run_bench(const Dataset& dataset, const ScanConfig& config,
                             PipelineMode mode, int workers, int repeats,
                             GridDims dims = GridDims{1, 1}, double apm = 0.0,
                             const CrsOptions& crs_options = {}) {
  if (repeats < 1) throw parameter_error("run_bench: repeats must be >= 1");
  config.validate();

  auto one_run = [&](CacheStats* stats) {
    if (mode == PipelineMode::cmp) {
      run_cmp(dataset, config, workers, stats);
    } else {
      CrsOptions opts = crs_options;
      opts.workers_per_shard = workers;
      run_crs(dataset, config, dims, apm, opts, nullptr, stats);
    }
  };

  BenchReport report;
  report.mode = mode;
  report.workers = workers;
  report.repeats = repeats;
  report.config = config;

  one_run(&report.stats);  // warm-up, also provides the counters

  std::vector<double> elapsed(repeats);
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    one_run(nullptr);
    elapsed[r] = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  }
  std::sort(elapsed.begin(), elapsed.end());
  report.elapsed_s = repeats % 2 == 1
                         ? elapsed[repeats / 2]
                         : 0.5 * (elapsed[repeats / 2 - 1] +
                                  elapsed[repeats / 2]);
  report.semblance_traces = report.stats.naive_fetches;
  report.throughput =
      report.elapsed_s > 0.0
          ? static_cast<double>(report.semblance_traces) / report.elapsed_s
          : 0.0;
  return report;
}

}  // namespace velan
