#include "vibronic/timetag.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vibronic {

namespace {

constexpr std::array<char, 4> kMagic = {'P', 'T', 'G', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kResolutionPs = 1;
constexpr std::size_t kHeaderSize = 32;
constexpr std::size_t kRecordSize = 12;

void put_u32le(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

void put_u64le(unsigned char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint32_t get_u32le(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

bool TimeTagStream::is_sorted() const {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].timestamp_ps < events[i - 1].timestamp_ps) return false;
  }
  return true;
}

void TimeTagStream::validate() const {
  if (channel_count == 0) throw std::invalid_argument("channel_count must be > 0");
  for (const auto& e : events) {
    if (e.timestamp_ps < 0)
      throw std::invalid_argument("negative timestamp in stream");
    if (e.channel >= channel_count && e.channel != 0xFF)
      throw std::invalid_argument("event channel outside channel_count");
  }
  if (!is_sorted()) throw std::invalid_argument("stream timestamps not sorted");
}

TimeTagStream split_by_channel(const TimeTagStream& stream, std::uint8_t channel) {
  if (channel >= stream.channel_count)
    throw std::invalid_argument("unknown channel " + std::to_string(channel));
  TimeTagStream out;
  out.channel_count = stream.channel_count;
  for (const auto& e : stream.events) {
    if (e.channel == channel) out.events.push_back(e);
  }
  return out;
}

void write_timetag_file(const TimeTagStream& stream, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write time-tag file: " + path);

  unsigned char header[kHeaderSize] = {};
  std::memcpy(header, kMagic.data(), 4);
  put_u32le(header + 4, kVersion);
  put_u64le(header + 8, kResolutionPs);
  header[16] = stream.channel_count;
  out.write(reinterpret_cast<const char*>(header), kHeaderSize);

  std::int64_t prev = 0;
  for (const auto& e : stream.events) {
    if (e.timestamp_ps < prev)
      throw std::invalid_argument("refusing to write unsorted time-tag stream");
    prev = e.timestamp_ps;
    unsigned char rec[kRecordSize] = {};
    put_u64le(rec, static_cast<std::uint64_t>(e.timestamp_ps));
    rec[8] = e.channel;
    rec[9] = e.origin;
    rec[10] = e.phonon_count;
    rec[11] = 0;
    out.write(reinterpret_cast<const char*>(rec), kRecordSize);
  }
  if (!out) throw std::runtime_error("short write on time-tag file: " + path);
}

TimeTagStream read_timetag_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open time-tag file: " + path);

  unsigned char header[kHeaderSize];
  in.read(reinterpret_cast<char*>(header), kHeaderSize);
  if (in.gcount() != static_cast<std::streamsize>(kHeaderSize))
    throw std::runtime_error("truncated time-tag header in " + path);
  if (std::memcmp(header, kMagic.data(), 4) != 0)
    throw std::runtime_error("bad magic in time-tag file " + path);
  if (get_u32le(header + 4) != kVersion)
    throw std::runtime_error("unsupported time-tag format version in " + path);
  if (get_u64le(header + 8) != kResolutionPs)
    throw std::runtime_error("unsupported timestamp resolution in " + path);

  TimeTagStream stream;
  stream.channel_count = header[16];
  if (stream.channel_count == 0)
    throw std::runtime_error("zero channel count in " + path);

  unsigned char rec[kRecordSize];
  std::int64_t prev = -1;
  while (in.read(reinterpret_cast<char*>(rec), kRecordSize)) {
    PhotonEvent e;
    e.timestamp_ps = static_cast<std::int64_t>(get_u64le(rec));
    e.channel = rec[8];
    e.origin = rec[9];
    e.phonon_count = rec[10];
    if (e.timestamp_ps < prev)
      throw std::runtime_error("nonmonotonic timestamps in " + path);
    prev = e.timestamp_ps;
    stream.events.push_back(e);
  }
  if (in.gcount() != 0)
    throw std::runtime_error("trailing partial record in " + path);
  return stream;
}

}  // namespace vibronic
