#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace vibronic {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a 64-bit digest of a file's bytes, hex encoded.
std::string file_digest(const std::string& path);

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  // Writes the manifest JSON, recording a digest for every listed file.
  void write(const std::string& path) const;
};

// Parses a duration like "10ns", "2.5us", "1ms", "30s" or a plain number
// of picoseconds into integer picoseconds.
std::int64_t parse_duration_ps(const std::string& text);

}  // namespace vibronic
