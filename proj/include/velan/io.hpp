#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "velan/error.hpp"
#include "velan/scan.hpp"
#include "velan/types.hpp"

namespace velan {

namespace detail {

// Little-endian byte stream helpers; files are byte-exact across hosts.
class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void raw(const std::string& s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw error("cannot open for writing: " + path.string());
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw error("write failed: " + path.string());
  }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open for reading: " + path.string());
    bytes_.assign(std::istreambuf_iterator<char>(in),
                  std::istreambuf_iterator<char>());
  }

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }

  std::uint32_t u32(const char* what) {
    if (remaining() < 4)
      throw format_error(std::string("truncated file reading ") + what, pos_);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string raw(std::uint64_t n, const char* what) {
    if (remaining() < n)
      throw format_error(std::string("truncated file reading ") + what, pos_);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::vector<char> bytes_;
  std::uint64_t pos_ = 0;
};

}  // namespace detail

inline constexpr std::uint32_t kDatasetVersion = 1;

// Trace-file format "SSF1", little-endian:
//   magic "SSF1", version u32, ncdps u32, fold u32,
//   per gather: cdp_id u32, M u32, ns u32, dt_us u32,
//               per trace: sx, sy, gx, gy f32, then ns * f32 samples,
//   optional trailing metadata: length u32 + JSON bytes.
inline void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  detail::ByteWriter out;
  out.raw("SSF1");
  out.u32(kDatasetVersion);
  out.u32(ds.ncdps());
  out.u32(ds.fold);
  for (const CdpGather& g : ds.gathers) {
    if (g.traces.size() > ds.fold)
      throw parameter_error("write_dataset: gather " +
                            std::to_string(g.cdp_id) + " exceeds fold");
    out.u32(g.cdp_id);
    out.u32(g.ntraces());
    out.u32(g.ns);
    out.u32(g.dt_us);
    for (const Trace& t : g.traces) {
      if (t.samples.size() != g.ns)
        throw parameter_error("write_dataset: trace sample count != ns");
      out.f32(t.sx);
      out.f32(t.sy);
      out.f32(t.gx);
      out.f32(t.gy);
      for (float s : t.samples) out.f32(s);
    }
  }
  if (!ds.metadata_json.empty()) {
    out.u32(static_cast<std::uint32_t>(ds.metadata_json.size()));
    out.raw(ds.metadata_json);
  }
  out.save(path);
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  detail::ByteReader in(path);
  const std::string magic = in.raw(4, "magic");
  if (magic != "SSF1") throw format_error("bad magic, expected SSF1", 0);
  const std::uint32_t version = in.u32("version");
  if (version != kDatasetVersion)
    throw format_error("unsupported version " + std::to_string(version), 4);
  Dataset ds;
  const std::uint32_t ncdps = in.u32("ncdps");
  ds.fold = in.u32("fold");
  ds.gathers.reserve(ncdps);
  for (std::uint32_t i = 0; i < ncdps; ++i) {
    CdpGather g;
    g.cdp_id = in.u32("cdp_id");
    const std::uint32_t ntraces = in.u32("trace count");
    g.ns = in.u32("ns");
    g.dt_us = in.u32("dt");
    if (ntraces > ds.fold)
      throw format_error("gather " + std::to_string(g.cdp_id) +
                             " has more traces than fold",
                         in.offset() - 12);
    if (g.dt_us == 0)
      throw format_error("gather " + std::to_string(g.cdp_id) + " has dt 0",
                         in.offset() - 4);
    g.traces.resize(ntraces);
    for (Trace& t : g.traces) {
      t.sx = in.f32("sx");
      t.sy = in.f32("sy");
      t.gx = in.f32("gx");
      t.gy = in.f32("gy");
      t.samples.resize(g.ns);
      for (float& s : t.samples) s = in.f32("sample");
    }
    ds.gathers.push_back(std::move(g));
  }
  if (in.remaining() > 0) {
    const std::uint32_t len = in.u32("metadata length");
    ds.metadata_json = in.raw(len, "metadata");
  }
  if (in.remaining() != 0)
    throw format_error("trailing bytes after metadata", in.offset());
  return ds;
}

inline constexpr std::uint32_t kPicksVersion = 1;

// Scan-output format "SMB1", little-endian:
//   magic "SMB1", version u32, ncdps u32, flags u32 (bit 0: full matrices),
//   per CDP: cdp_id u32, ns u32, nc u32, ns * (velocity f32, semblance f32),
//            and when flagged the full ns * nc semblance matrix.
inline void write_picks(const std::vector<SemblanceMatrix>& results,
                        const std::filesystem::path& path,
                        bool include_matrix = false) {
  detail::ByteWriter out;
  out.raw("SMB1");
  out.u32(kPicksVersion);
  out.u32(static_cast<std::uint32_t>(results.size()));
  out.u32(include_matrix ? 1u : 0u);
  for (const SemblanceMatrix& m : results) {
    out.u32(m.cdp_id);
    out.u32(static_cast<std::uint32_t>(m.ns));
    out.u32(static_cast<std::uint32_t>(m.nc));
    for (const BestPick& p : m.best_velocity) {
      out.f32(p.velocity);
      out.f32(p.semblance);
    }
    if (include_matrix)
      for (float v : m.values) out.f32(v);
  }
  out.save(path);
}

inline std::vector<SemblanceMatrix> read_picks(
    const std::filesystem::path& path) {
  detail::ByteReader in(path);
  if (in.raw(4, "magic") != "SMB1")
    throw format_error("bad magic, expected SMB1", 0);
  const std::uint32_t version = in.u32("version");
  if (version != kPicksVersion)
    throw format_error("unsupported version " + std::to_string(version), 4);
  const std::uint32_t ncdps = in.u32("ncdps");
  const bool has_matrix = (in.u32("flags") & 1u) != 0;
  std::vector<SemblanceMatrix> results(ncdps);
  for (SemblanceMatrix& m : results) {
    m.cdp_id = in.u32("cdp_id");
    m.ns = static_cast<int>(in.u32("ns"));
    m.nc = static_cast<int>(in.u32("nc"));
    m.best_velocity.resize(m.ns);
    for (BestPick& p : m.best_velocity) {
      p.velocity = in.f32("pick velocity");
      p.semblance = in.f32("pick semblance");
    }
    if (has_matrix) {
      m.values.resize(static_cast<std::size_t>(m.ns) * m.nc);
      for (float& v : m.values) v = in.f32("matrix value");
    }
  }
  if (in.remaining() != 0)
    throw format_error("trailing bytes", in.offset());
  return results;
}

}  // namespace velan
