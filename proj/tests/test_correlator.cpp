#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vibronic/correlator.hpp"
#include "vibronic/rng.hpp"
#include "vibronic/timetag.hpp"

using namespace vibronic;

namespace {

TimeTagStream random_stream(Rng& rng, std::size_t n, std::int64_t span_ps) {
  TimeTagStream s;
  s.events.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ts = static_cast<std::int64_t>(
        rng.uniform() * static_cast<double>(span_ps));
    s.events.push_back(PhotonEvent{ts, 0, kOriginMeasured, 0});
  }
  std::sort(s.events.begin(), s.events.end(), event_before);
  return s;
}

TimeTagStream poisson_stream(Rng& rng, double rate_hz, double duration_s) {
  TimeTagStream s;
  double t = 0.0;
  while (true) {
    t += rng.exponential(1.0 / rate_hz);
    if (t > duration_s) break;
    s.events.push_back(PhotonEvent{
        static_cast<std::int64_t>(std::floor(t * 1e12 + 0.5)), 0,
        kOriginMeasured, 0});
  }
  return s;
}

}  // namespace

TEST_CASE("sliding-window correlator matches the brute-force oracle") {
  Rng rng(314159);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t na = 2 + rng.index(1500);
    const std::size_t nb = 2 + rng.index(1500);
    const std::int64_t span = 1000 + static_cast<std::int64_t>(rng.index(200000));
    const std::int64_t bw = 1 + static_cast<std::int64_t>(rng.index(50));
    const std::int64_t max_tau = bw * (1 + static_cast<std::int64_t>(rng.index(40)));
    const bool same = (trial % 3 == 0);

    const TimeTagStream a = random_stream(rng, na, span);
    const TimeTagStream b = same ? a : random_stream(rng, nb, span);

    const auto fast = correlate(a, b, bw, max_tau, same);
    const auto slow = brute_force_correlate(a, b, bw, max_tau, same);
    REQUIRE(fast.counts.size() == slow.counts.size());
    CHECK(fast.counts == slow.counts);
    CHECK(fast.pair_norm == doctest::Approx(slow.pair_norm));
  }
}

TEST_CASE("hand-counted delays land in the right bins") {
  TimeTagStream a, b;
  a.events = {{0, 0, kOriginMeasured, 0}};
  b.events = {{0, 0, kOriginMeasured, 0}, {7000, 0, kOriginMeasured, 0}};

  const auto h = correlate(a, b, 1000, 10000);
  REQUIRE(h.counts.size() == 21);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const std::uint64_t expected = (i == 10 || i == 17) ? 1 : 0;
    CHECK(h.counts[i] == expected);
  }

  // self-correlation of the two-event stream: one pair at each sign
  const auto ha = correlate(b, b, 1000, 10000, true);
  CHECK(ha.counts[10] == 0);  // self-pairs excluded
  CHECK(ha.counts[17] == 1);
  CHECK(ha.counts[3] == 1);
}

TEST_CASE("a delay on a bin edge goes to the higher bin") {
  TimeTagStream a, b;
  a.events = {{0, 0, kOriginMeasured, 0}};
  b.events = {{1500, 0, kOriginMeasured, 0}};
  const auto h = correlate(a, b, 1000, 5000);
  REQUIRE(h.counts.size() == 11);
  // bins are centered on multiples of the width; tau = 1500 is the shared
  // edge of the 1000 and 2000 bins and lands in the 2000 bin
  CHECK(h.counts[5 + 2] == 1);
  CHECK(h.counts[5 + 1] == 0);
}

TEST_CASE("exchange and auto symmetry with odd bin widths") {
  Rng rng(2718);
  const TimeTagStream a = random_stream(rng, 800, 500000);
  const TimeTagStream b = random_stream(rng, 700, 500000);

  // odd width: bin edges sit at half-integers, no integer delay is ambiguous
  const auto ab = correlate(a, b, 999, 30000);
  const auto ba = correlate(b, a, 999, 30000);
  REQUIRE(ab.counts.size() == ba.counts.size());
  for (std::size_t i = 0; i < ab.counts.size(); ++i)
    CHECK(ab.counts[i] == ba.counts[ab.counts.size() - 1 - i]);

  const auto aa = correlate(a, a, 999, 30000, true);
  for (std::size_t i = 0; i < aa.counts.size(); ++i)
    CHECK(aa.counts[i] == aa.counts[aa.counts.size() - 1 - i]);
}

TEST_CASE("Poisson stream normalizes to g2 = 1") {
  Rng rng(555);
  const TimeTagStream s = poisson_stream(rng, 1e4, 100.0);
  REQUIRE(s.events.size() > 900000);

  const auto h = correlate(s, s, 10000, 1000000, true);  // 10 ns bins, +-1 us
  double mean = 0.0;
  std::size_t within = 0;
  for (std::size_t i = 0; i < h.g2.size(); ++i) {
    mean += h.g2[i];
    if (std::abs(h.g2[i] - 1.0) <= 3.0 * h.sigma[i]) within += 1;
  }
  mean /= static_cast<double>(h.g2.size());
  CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
  CHECK(static_cast<double>(within) >=
        0.95 * static_cast<double>(h.g2.size()));

  const auto z = g2_at_zero(h, 5);
  CHECK(std::abs(z.value - 1.0) < 4.0 * z.sigma);
}

TEST_CASE("correlate input validation") {
  Rng rng(1);
  const TimeTagStream a = random_stream(rng, 50, 10000);
  TimeTagStream empty;

  CHECK_THROWS(correlate(a, empty, 10, 100));
  CHECK_THROWS(correlate(empty, a, 10, 100));
  CHECK_THROWS(correlate(a, a, 0, 100));
  CHECK_THROWS(correlate(a, a, 100, 50));  // window narrower than a bin

  TimeTagStream unsorted = a;
  std::swap(unsorted.events.front(), unsorted.events.back());
  CHECK_THROWS(correlate(unsorted, a, 10, 100));

  TimeTagStream big;
  big.events.assign(100001, PhotonEvent{0, 0, kOriginMeasured, 0});
  CHECK_THROWS(brute_force_correlate(big, big, 10, 100, true));
}

TEST_CASE("g2_at_zero window validation") {
  Rng rng(9);
  const TimeTagStream s = poisson_stream(rng, 1e5, 1.0);
  const auto h = correlate(s, s, 1000, 10000, true);

  CHECK_THROWS(g2_at_zero(h, 0));
  CHECK_THROWS(g2_at_zero(h, 4));    // must be odd
  CHECK_THROWS(g2_at_zero(h, 999));  // wider than the histogram

  CorrelationHistogram hollow = h;
  std::fill(hollow.counts.begin(), hollow.counts.end(), std::uint64_t{0});
  CHECK_THROWS(g2_at_zero(hollow, 3));
}

TEST_CASE("zero-count bins are flagged and given an error floor") {
  TimeTagStream a, b;
  a.events = {{0, 0, kOriginMeasured, 0}, {1000000, 0, kOriginMeasured, 0}};
  b.events = a.events;
  const auto h = correlate(a, b, 100, 1000);
  CHECK(h.zero_count_bins_flagged);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (h.counts[i] == 0) CHECK(h.sigma[i] > 0.0);
  }
}

TEST_CASE("histogram JSON round trip") {
  Rng rng(77);
  const TimeTagStream s = poisson_stream(rng, 1e5, 0.5);
  auto h = correlate(s, s, 1000, 20000, true);
  h.label = "roundtrip";
  save_histogram_json(h, "test_hist.json");
  const auto back = load_histogram_json("test_hist.json");

  CHECK(back.bin_width_ps == h.bin_width_ps);
  CHECK(back.half_bins == h.half_bins);
  CHECK(back.counts == h.counts);
  CHECK(back.label == h.label);
  CHECK(back.pair_norm == doctest::Approx(h.pair_norm).epsilon(1e-12));
  CHECK(back.g2[3] == doctest::Approx(h.g2[3]).epsilon(1e-12));
  std::remove("test_hist.json");
}
