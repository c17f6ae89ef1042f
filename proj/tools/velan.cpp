// velan - seismic velocity analysis toolkit
//
// Subcommands: gen, cmp, crs, verify, bench, roofline. All reports are JSON
// on stdout (or --out). Exit codes: 0 success, 1 verification failure,
// 2 usage error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "velan/velan.hpp"

namespace {

using nlohmann::json;

int default_workers() {
  if (const char* env = std::getenv("SEMBLANCE_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

velan::GridDims parse_grid(const std::string& text) {
  velan::GridDims dims;
  char sep = 0;
  if (std::sscanf(text.c_str(), "%d%c%d", &dims.gx, &sep, &dims.gy) != 3 ||
      (sep != 'x' && sep != 'X') || dims.gx < 1 || dims.gy < 1)
    throw CLI::ValidationError("--grid", "expected GXxGY, e.g. 2x2");
  return dims;
}

std::vector<velan::ReflectorEvent> parse_events(const std::string& text) {
  std::vector<velan::ReflectorEvent> events;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find(',', pos);
    const std::string item =
        text.substr(pos, end == std::string::npos ? end : end - pos);
    velan::ReflectorEvent e;
    const int got = std::sscanf(item.c_str(), "%lf:%f:%f", &e.t0,
                                &e.velocity, &e.amplitude);
    if (got < 2)
      throw CLI::ValidationError("--events",
                                 "expected t0:velocity[:amplitude],...");
    if (got == 2) e.amplitude = 1.0f;
    events.push_back(e);
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return events;
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw velan::error("cannot open for writing: " + out_path);
  out << j.dump(2) << "\n";
}

// Scan flags shared by every subcommand that runs kernels.
struct ScanFlags {
  velan::ScanConfig config;
  std::string kernel = "blocked";
  int scratch_kb = 64;

  void attach(CLI::App* cmd) {
    cmd->add_option("--vmin", config.vmin, "lowest trial velocity, m/s");
    cmd->add_option("--vmax", config.vmax, "highest trial velocity, m/s");
    cmd->add_option("--nc", config.nc, "number of trial velocities");
    cmd->add_option("--window", config.w, "semblance window, samples");
    cmd->add_option("--tile", config.tile_size,
                    "pairs per sweep (0 = derive from scratch budget)");
    cmd->add_option("--lanes", config.lane_width, "vector lane width (4 or 8)");
    cmd->add_option("--size-h", config.size_h, "halfpoint prefetch block");
    cmd->add_option("--scratch-kb", scratch_kb, "scratch budget per worker, KB");
    cmd->add_option("--range-cap", config.range_cap,
                    "largest coalesced fetch, samples");
    cmd->add_option("--kernel", kernel, "kernel variant")
        ->check(CLI::IsMember({"baseline", "blocked", "simd"}));
  }

  velan::ScanConfig resolve() {
    config.scratch_budget = static_cast<std::size_t>(scratch_kb) * 1024;
    if (kernel == "baseline")
      config.kernel_variant = velan::KernelVariant::baseline;
    else if (kernel == "simd")
      config.kernel_variant = velan::KernelVariant::vectorized;
    else
      config.kernel_variant = velan::KernelVariant::blocked;
    return config;
  }
};

struct GenArgs {
  int ncdps = 1, fold = 60, ns = 550;
  std::uint32_t dt = 220;
  std::uint64_t seed = 0;
  // noiseless tails underflow single precision and make coherence of dead
  // windows ill-defined, so a light noise floor is the default
  double snr = 10.0, freq = 25.0, max_offset = 200.0, spacing = 25.0;
  std::string events;
  std::string out;
};

int run_gen(const GenArgs& a) {
  velan::GenParams p;
  p.ncdps = a.ncdps;
  p.fold = a.fold;
  p.ns = a.ns;
  p.dt_us = a.dt;
  p.seed = a.seed;
  p.snr = a.snr;
  p.wavelet_freq = a.freq;
  p.max_offset = a.max_offset;
  p.cdp_spacing = a.spacing;
  if (!a.events.empty()) {
    p.events = parse_events(a.events);
  } else {
    const double t_max = a.ns * static_cast<double>(a.dt) * 1e-6;
    p.events = {velan::ReflectorEvent{0.28 * t_max, 2500.0f, 1.0f},
                velan::ReflectorEvent{0.56 * t_max, 2700.0f, 0.8f}};
  }
  const velan::Dataset ds = velan::generate_synthetic(p);
  velan::write_dataset(ds, a.out);
  json events = json::array();
  for (const velan::ReflectorEvent& e : p.events)
    events.push_back(
        {{"t0", e.t0}, {"velocity", e.velocity}, {"amplitude", e.amplitude}});
  emit({{"file", a.out},
        {"ncdps", ds.ncdps()},
        {"fold", ds.fold},
        {"ns", a.ns},
        {"dt_us", a.dt},
        {"seed", a.seed},
        {"snr", a.snr},
        {"events", events}},
       "");
  return 0;
}

struct RunArgs {
  std::string data;
  std::string out;        // picks file
  std::string report;     // report JSON path ("" = stdout)
  bool matrix = false;
  bool stats = false;
  int workers = default_workers();
  std::string grid = "1x1";
  double apm = 0.0;
};

int run_pipeline(velan::PipelineMode mode, RunArgs& a, ScanFlags& flags) {
  const velan::ScanConfig config = flags.resolve();
  const velan::Dataset ds = velan::read_dataset(a.data);
  velan::CacheStats stats;
  const auto start = std::chrono::steady_clock::now();
  std::vector<velan::SemblanceMatrix> results;
  if (mode == velan::PipelineMode::cmp) {
    results = velan::run_cmp(ds, config, a.workers, &stats);
  } else {
    velan::CrsOptions opts;
    opts.workers_per_shard = a.workers;
    results = velan::run_crs(ds, config, parse_grid(a.grid), a.apm, opts,
                             nullptr, &stats);
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (!a.out.empty()) velan::write_picks(results, a.out, a.matrix);
  json report = {{"mode", mode == velan::PipelineMode::cmp ? "cmp" : "crs"},
                 {"data", a.data},
                 {"ncdps", results.size()},
                 {"workers", a.workers},
                 {"elapsed_s", elapsed},
                 {"config", velan::to_json(config)}};
  if (!a.out.empty()) report["picks"] = a.out;
  if (mode == velan::PipelineMode::crs) {
    report["grid"] = a.grid;
    report["apm"] = a.apm;
  }
  if (a.stats) report["cache"] = velan::to_json(stats);
  emit(report, a.report);
  return 0;
}

struct VerifyArgs {
  std::string data;
  std::string mode = "cmp";
  std::string report;
  int workers = default_workers();
  std::string grid = "1x1";
  double apm = 0.0;
  double tol = 1e-4;
};

int run_verify(VerifyArgs& a, ScanFlags& flags) {
  const velan::ScanConfig config = flags.resolve();
  const velan::Dataset ds = velan::read_dataset(a.data);
  std::vector<velan::SemblanceMatrix> run, ref;
  if (a.mode == "cmp") {
    run = velan::run_cmp(ds, config, a.workers);
    ref = velan::oracle::run_reference_cmp(ds, config);
  } else {
    if (!(a.apm > 0.0))
      throw CLI::ValidationError("--apm", "crs verification needs --apm");
    velan::CrsOptions opts;
    opts.workers_per_shard = a.workers;
    run = velan::run_crs(ds, config, parse_grid(a.grid), a.apm, opts);
    ref = velan::oracle::run_reference_crs(ds, config, a.apm);
  }
  const velan::oracle::ErrorReport r = velan::oracle::compare(run, ref);
  const bool pass = r.max_rel_err <= a.tol && r.argmax_mismatches == 0;
  emit({{"mode", a.mode},
        {"data", a.data},
        {"cells", r.cells},
        {"max_rel_err", r.max_rel_err},
        {"mean_rel_err", r.mean_rel_err},
        {"argmax_mismatches", r.argmax_mismatches},
        {"tie_excused", r.tie_excused},
        {"tolerance", a.tol},
        {"pass", pass}},
       a.report);
  return pass ? 0 : 1;
}

struct BenchArgs {
  std::string data;
  std::string mode = "cmp";
  std::string report;
  std::vector<int> workers = {default_workers()};
  int repeats = 3;
  std::string grid = "1x1";
  double apm = 0.0;
};

int run_bench_cmd(BenchArgs& a, ScanFlags& flags) {
  const velan::ScanConfig config = flags.resolve();
  const velan::Dataset ds = velan::read_dataset(a.data);
  const velan::PipelineMode mode = a.mode == "crs" ? velan::PipelineMode::crs
                                                   : velan::PipelineMode::cmp;
  if (mode == velan::PipelineMode::crs && !(a.apm > 0.0))
    throw CLI::ValidationError("--apm", "crs benchmarks need --apm");

  json runs = json::array();
  double base_throughput = 0.0;
  int base_workers = 1;
  for (std::size_t i = 0; i < a.workers.size(); ++i) {
    const velan::BenchReport r =
        velan::run_bench(ds, config, mode, a.workers[i], a.repeats,
                         parse_grid(a.grid), a.apm);
    json entry = r.to_json();
    if (i == 0) {
      base_throughput = r.throughput;
      base_workers = r.workers;
    }
    if (base_throughput > 0.0)
      entry["efficiency"] = (r.throughput / base_throughput) *
                            (static_cast<double>(base_workers) / r.workers);
    runs.push_back(std::move(entry));
  }
  emit(a.workers.size() == 1 ? runs[0] : json{{"sweep", runs}}, a.report);
  return 0;
}

struct RooflineArgs {
  double size_get = 0.0;
  double flops_base = 12.0, flops_per_w = 7.0, bytes_per_sample = 4.0;
  std::string data;
  std::string report;
};

int run_roofline(RooflineArgs& a, ScanFlags& flags) {
  const velan::ScanConfig config = flags.resolve();
  velan::RooflineInput in{static_cast<double>(config.effective_tile_size()),
                          static_cast<double>(config.w), a.size_get};
  json source = "flags";
  if (!a.data.empty()) {
    // measure size_get from an actual run's cache counters
    const velan::Dataset ds = velan::read_dataset(a.data);
    velan::CacheStats stats;
    velan::run_cmp(ds, config, 1, &stats);
    if (stats.range_fetches == 0)
      throw velan::error("roofline: no fetches recorded on " + a.data);
    in.size_get = static_cast<double>(stats.samples_fetched) /
                  static_cast<double>(stats.range_fetches);
    source = a.data;
  }
  const velan::RooflineConstants k{a.flops_base, a.flops_per_w,
                                   a.bytes_per_sample};
  emit({{"tile", in.tile},
        {"window", in.w},
        {"size_get", in.size_get},
        {"flops_per_intersection", k.flops_base + k.flops_per_w * in.w},
        {"bytes_per_sample", k.bytes_per_sample},
        {"intensity_flops_per_byte", velan::operational_intensity(in, k)},
        {"measured_from", source}},
       a.report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"velan - CMP/CRS semblance velocity analysis toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset");
  gen_cmd->add_option("--ncdps", gen.ncdps, "number of CDP gathers");
  gen_cmd->add_option("--fold", gen.fold, "traces per gather");
  gen_cmd->add_option("--ns", gen.ns, "samples per trace");
  gen_cmd->add_option("--dt", gen.dt, "sampling interval, microseconds");
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--snr", gen.snr, "peak/sigma noise ratio (0 = none)");
  gen_cmd->add_option("--freq", gen.freq, "wavelet peak frequency, Hz");
  gen_cmd->add_option("--max-offset", gen.max_offset,
                      "largest source-receiver offset, m");
  gen_cmd->add_option("--spacing", gen.spacing, "midpoint grid spacing, m");
  gen_cmd->add_option("--events", gen.events,
                      "reflectors as t0:velocity[:amplitude],...");
  gen_cmd->add_option("--out", gen.out, "output dataset path")->required();

  RunArgs cmp_args;
  ScanFlags cmp_flags;
  CLI::App* cmp_cmd = app.add_subcommand("cmp", "run the CMP velocity scan");
  cmp_cmd->add_option("--data", cmp_args.data, "input dataset")->required();
  cmp_cmd->add_option("--out", cmp_args.out, "picks output file");
  cmp_cmd->add_option("--report", cmp_args.report, "report path (default stdout)");
  cmp_cmd->add_flag("--matrix", cmp_args.matrix, "include full matrices");
  cmp_cmd->add_flag("--stats", cmp_args.stats, "include cache statistics");
  cmp_cmd->add_option("--workers", cmp_args.workers, "worker threads");
  cmp_flags.attach(cmp_cmd);

  RunArgs crs_args;
  ScanFlags crs_flags;
  CLI::App* crs_cmd = app.add_subcommand("crs", "run the CRS velocity scan");
  crs_cmd->add_option("--data", crs_args.data, "input dataset")->required();
  crs_cmd->add_option("--out", crs_args.out, "picks output file");
  crs_cmd->add_option("--report", crs_args.report, "report path (default stdout)");
  crs_cmd->add_flag("--matrix", crs_args.matrix, "include full matrices");
  crs_cmd->add_flag("--stats", crs_args.stats, "include cache statistics");
  crs_cmd->add_option("--workers", crs_args.workers, "workers per shard");
  crs_cmd->add_option("--grid", crs_args.grid, "shard grid as GXxGY");
  crs_cmd->add_option("--apm", crs_args.apm, "neighborhood radius, m")
      ->required();
  crs_flags.attach(crs_cmd);

  VerifyArgs verify_args;
  ScanFlags verify_flags;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "compare a run against the oracle");
  verify_cmd->add_option("--data", verify_args.data, "input dataset")
      ->required();
  verify_cmd->add_option("--mode", verify_args.mode, "cmp or crs")
      ->check(CLI::IsMember({"cmp", "crs"}));
  verify_cmd->add_option("--report", verify_args.report,
                         "report path (default stdout)");
  verify_cmd->add_option("--workers", verify_args.workers, "worker threads");
  verify_cmd->add_option("--grid", verify_args.grid, "shard grid as GXxGY");
  verify_cmd->add_option("--apm", verify_args.apm, "neighborhood radius, m");
  verify_cmd->add_option("--tol", verify_args.tol,
                         "max relative error tolerance");
  verify_flags.attach(verify_cmd);

  BenchArgs bench_args;
  ScanFlags bench_flags;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "throughput in semblance-trace/s");
  bench_cmd->add_option("--data", bench_args.data, "input dataset")
      ->required();
  bench_cmd->add_option("--mode", bench_args.mode, "cmp or crs")
      ->check(CLI::IsMember({"cmp", "crs"}));
  bench_cmd->add_option("--report", bench_args.report,
                        "report path (default stdout)");
  bench_cmd->add_option("--workers", bench_args.workers,
                        "worker counts to sweep, e.g. 1,2,4,8")
      ->delimiter(',');
  bench_cmd->add_option("--repeats", bench_args.repeats,
                        "timed repeats (median reported)");
  bench_cmd->add_option("--grid", bench_args.grid, "shard grid as GXxGY");
  bench_cmd->add_option("--apm", bench_args.apm, "neighborhood radius, m");
  bench_flags.attach(bench_cmd);

  RooflineArgs roof_args;
  ScanFlags roof_flags;
  CLI::App* roof_cmd =
      app.add_subcommand("roofline", "operational intensity calculator");
  roof_cmd->add_option("--size-get", roof_args.size_get,
                       "samples per coalesced fetch");
  roof_cmd->add_option("--data", roof_args.data,
                       "measure size_get from this dataset");
  roof_cmd->add_option("--report", roof_args.report,
                       "report path (default stdout)");
  roof_cmd->add_option("--flops-base", roof_args.flops_base,
                       "flops per intersection, constant term");
  roof_cmd->add_option("--flops-per-w", roof_args.flops_per_w,
                       "flops per intersection per window sample");
  roof_cmd->add_option("--bytes-per-sample", roof_args.bytes_per_sample,
                       "bytes moved per sample");
  roof_flags.attach(roof_cmd);

  try {
    app.parse(argc, argv);
    if (gen_cmd->parsed()) return run_gen(gen);
    if (cmp_cmd->parsed())
      return run_pipeline(velan::PipelineMode::cmp, cmp_args, cmp_flags);
    if (crs_cmd->parsed())
      return run_pipeline(velan::PipelineMode::crs, crs_args, crs_flags);
    if (verify_cmd->parsed()) return run_verify(verify_args, verify_flags);
    if (bench_cmd->parsed()) return run_bench_cmd(bench_args, bench_flags);
    if (roof_cmd->parsed()) return run_roofline(roof_args, roof_flags);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message and usage hint
    return 2;
  } catch (const velan::error& e) {
    std::cerr << "velan: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "velan: " << e.what() << "\n";
    return 2;
  }
}
