#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vibronic/timetag.hpp"

namespace vibronic {

// Normalized second-order correlation estimate on a uniform tau grid
// symmetric about zero (odd number of bins, central bin straddles tau = 0).
struct CorrelationHistogram {
  std::int64_t bin_width_ps = 1;
  std::int64_t half_bins = 0;        // bins run over k in [-half_bins, half_bins]
  std::vector<std::uint64_t> counts;
  std::vector<double> g2;
  std::vector<double> sigma;

  // metadata
  double rate_a_hz = 0.0;
  double rate_b_hz = 0.0;
  std::int64_t overlap_ps = 0;
  double pair_norm = 0.0;  // expected counts per bin for uncorrelated streams
  bool zero_count_bins_flagged = false;
  std::string label;

  std::size_t bin_count() const { return counts.size(); }
  std::int64_t bin_center_ps(std::size_t i) const {
    return (static_cast<std::int64_t>(i) - half_bins) * bin_width_ps;
  }
  double bin_edge_low_ps(std::size_t i) const {
    return (static_cast<double>(bin_center_ps(i))) - 0.5 * static_cast<double>(bin_width_ps);
  }
};

// Full pair correlation (not start-stop): counts every ordered pair (a, b)
// whose delay t_b - t_a falls in the tau window, via a sliding window over
// the sorted streams. Set same_stream when both arguments are the same
// physical stream so self-pairs are excluded.
CorrelationHistogram correlate(const TimeTagStream& a, const TimeTagStream& b,
                               std::int64_t bin_width_ps, std::int64_t max_tau_ps,
                               bool same_stream = false);

// Reference implementation by explicit double loop; bit-identical counts.
// Guarded against quadratic blowup above 1e5 events per stream.
CorrelationHistogram brute_force_correlate(const TimeTagStream& a,
                                           const TimeTagStream& b,
                                           std::int64_t bin_width_ps,
                                           std::int64_t max_tau_ps,
                                           bool same_stream = false);

struct ValueWithSigma {
  double value = 0.0;
  double sigma = 0.0;
};

// Average g2 over the central window_bins bins with propagated Poisson error.
ValueWithSigma g2_at_zero(const CorrelationHistogram& hist, std::size_t window_bins);

void save_histogram_json(const CorrelationHistogram& hist, const std::string& path);
CorrelationHistogram load_histogram_json(const std::string& path);

}  // namespace vibronic
