#include "vibronic/manifest.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vibronic {

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for digest: " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ULL;
    }
    if (in.eof()) break;
  }
  std::ostringstream out;
  out << "fnv1a64:" << std::hex << hash;
  return out.str();
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;

  auto pack = [](const std::vector<std::string>& files) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : files)
      arr.push_back({{"path", f}, {"digest", file_digest(f)}});
    return arr;
  };
  j["inputs"] = pack(inputs);
  j["outputs"] = pack(outputs);

  const auto now = std::chrono::system_clock::now();
  j["wall_clock_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(
          now.time_since_epoch())
          .count();
#ifdef _WIN32
  j["host"] = "windows";
#else
  const char* host = std::getenv("HOSTNAME");
  j["host"] = host ? host : "unknown";
#endif

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

std::int64_t parse_duration_ps(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty duration");
  std::size_t pos = 0;
  double value;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed duration: " + text);
  }
  std::string unit = text.substr(pos);
  while (!unit.empty() && std::isspace(static_cast<unsigned char>(unit.front())))
    unit.erase(unit.begin());

  double scale_ps;
  if (unit.empty() || unit == "ps") scale_ps = 1.0;
  else if (unit == "ns") scale_ps = 1e3;
  else if (unit == "us") scale_ps = 1e6;
  else if (unit == "ms") scale_ps = 1e9;
  else if (unit == "s") scale_ps = 1e12;
  else throw std::invalid_argument("unknown duration unit in: " + text);

  const double ps = value * scale_ps;
  if (!(ps >= 0.0) || ps > 9.2e18)
    throw std::invalid_argument("duration out of range: " + text);
  return static_cast<std::int64_t>(std::llround(ps));
}

}  // namespace vibronic
