#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "velan/error.hpp"
#include "velan/scan.hpp"
#include "velan/trace_cache.hpp"
#include "velan/types.hpp"

namespace velan {

// Full grid search for one CDP.
inline SemblanceMatrix scan_cdp(const CdpGather& gather,
                                const ScanConfig& config, TraceCache& cache) {
  const TraceSweep sweep = TraceSweep::single(gather);
  return scan_sweep(sweep, gather.cdp_id, config, cache);
}

inline SemblanceMatrix scan_cdp(const CdpGather& gather,
                                const ScanConfig& config) {
  TraceCache cache(config.size_h, config.range_cap);
  return scan_cdp(gather, config, cache);
}

namespace detail {

// Work queue of index-addressed jobs over a fixed pool. Each worker owns a
// TraceCache; results land in pre-allocated slots so output order never
// depends on scheduling. The first worker exception aborts the queue.
template <typename Fn>
void parallel_for_indexed(std::size_t count, int workers, int size_h,
                          int range_cap, CacheStats* stats_out, Fn&& fn) {
  if (workers < 1) throw parameter_error("worker count must be >= 1");
  if (count == 0) return;
  const int nthreads = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(workers), count));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> completed{0};
  std::atomic<bool> failed{false};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<CacheStats> worker_stats(nthreads);

  auto body = [&](int slot) {
    TraceCache cache(size_h, range_cap);
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) break;
      try {
        fn(i, cache);
        completed.fetch_add(1, std::memory_order_relaxed);
      } catch (...) {
        {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
        failed.store(true, std::memory_order_relaxed);
        break;
      }
    }
    worker_stats[slot] = cache.stats();
  };

  if (nthreads == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int s = 0; s < nthreads; ++s) pool.emplace_back(body, s);
    for (std::thread& t : pool) t.join();
  }

  if (first_error) {
    try {
      std::rethrow_exception(first_error);
    } catch (const std::exception& e) {
      throw error("worker pool failure after " +
                  std::to_string(completed.load()) + " of " +
                  std::to_string(count) + " jobs: " + e.what());
    }
  }
  if (stats_out)
    for (const CacheStats& s : worker_stats) stats_out->merge(s);
}

}  // namespace detail

// Scan every CDP of the dataset. Output order matches input order and the
// result is bitwise identical for any worker count.
inline std::vector<SemblanceMatrix> run_cmp(const Dataset& dataset,
                                            const ScanConfig& config,
                                            int workers,
                                            CacheStats* stats_out = nullptr) {
  config.validate();
  std::vector<SemblanceMatrix> results(dataset.gathers.size());
  detail::parallel_for_indexed(
      dataset.gathers.size(), workers, config.size_h, config.range_cap,
      stats_out, [&](std::size_t i, TraceCache& cache) {
        results[i] = scan_cdp(dataset.gathers[i], config, cache);
      });
  return results;
}

}  // namespace velan
