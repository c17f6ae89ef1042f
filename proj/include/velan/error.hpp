#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace velan {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller handed an argument that violates a documented precondition.
struct parameter_error : error {
  using error::error;
};

// A ScanConfig (or shard layout) that cannot be run as requested. Raised at
// setup, never mid-sweep.
struct config_error : error {
  using error::error;
};

// Malformed or truncated file; carries the offset where decoding stopped.
struct format_error : error {
  format_error(const std::string& what, std::uint64_t offset)
      : error(what + " (byte offset " + std::to_string(offset) + ")"),
        byte_offset(offset) {}
  std::uint64_t byte_offset;
};

// Invariant broken inside the library itself.
struct internal_error : error {
  using error::error;
};

// A shard never received an expected halo message.
struct halo_timeout_error : error {
  using error::error;
};

}  // namespace velan
