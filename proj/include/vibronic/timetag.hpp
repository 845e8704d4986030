#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vibronic {

// Origin markers for simulated events; real measurements use kOriginMeasured.
inline constexpr std::uint8_t kOriginMeasured = 0xFF;
inline constexpr std::uint8_t kOriginBackground = 0xFE;
inline constexpr std::uint8_t kOriginCascade = 0xFD;

struct PhotonEvent {
  std::int64_t timestamp_ps = 0;
  std::uint8_t channel = 0;
  std::uint8_t origin = kOriginMeasured;
  std::uint8_t phonon_count = 0;

  friend bool operator==(const PhotonEvent&, const PhotonEvent&) = default;
};

// Total order used everywhere a stream is sorted: timestamp, then channel,
// then origin.
inline bool event_before(const PhotonEvent& a, const PhotonEvent& b) {
  if (a.timestamp_ps != b.timestamp_ps) return a.timestamp_ps < b.timestamp_ps;
  if (a.channel != b.channel) return a.channel < b.channel;
  return a.origin < b.origin;
}

struct TimeTagStream {
  std::uint8_t channel_count = 1;
  std::vector<PhotonEvent> events;  // nondecreasing timestamps

  bool is_sorted() const;
  void validate() const;
};

// Sorted sub-stream of one channel. Throws on a channel outside
// [0, channel_count).
TimeTagStream split_by_channel(const TimeTagStream& stream, std::uint8_t channel);

// PTG1 binary container: 32-byte header (magic "PTG1", u32 version = 1,
// u64 resolution_ps = 1, u8 channel count, 15 reserved zero bytes) followed
// by 12-byte records {u64 timestamp_ps, u8 channel, u8 origin,
// u8 phonon_count, u8 reserved}.
void write_timetag_file(const TimeTagStream& stream, const std::string& path);
TimeTagStream read_timetag_file(const std::string& path);

}  // namespace vibronic
