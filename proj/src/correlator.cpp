#include "vibronic/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace vibronic {

namespace {

std::int64_t floor_div(std::int64_t n, std::int64_t d) {
  return n >= 0 ? n / d : -((-n + d - 1) / d);
}

struct NormInfo {
  double rate_a_hz;
  double rate_b_hz;
  std::int64_t overlap_ps;
  double pair_norm;
};

std::size_t count_in_window(const std::vector<PhotonEvent>& ev, std::int64_t lo,
                            std::int64_t hi) {
  auto first = std::lower_bound(ev.begin(), ev.end(), lo,
                                [](const PhotonEvent& e, std::int64_t t) {
                                  return e.timestamp_ps < t;
                                });
  auto last = std::upper_bound(ev.begin(), ev.end(), hi,
                               [](std::int64_t t, const PhotonEvent& e) {
                                 return t < e.timestamp_ps;
                               });
  return static_cast<std::size_t>(last - first);
}

NormInfo normalization(const TimeTagStream& a, const TimeTagStream& b,
                       std::int64_t bin_width_ps) {
  std::int64_t t0 = std::max(a.events.front().timestamp_ps,
                             b.events.front().timestamp_ps);
  std::int64_t t1 = std::min(a.events.back().timestamp_ps,
                             b.events.back().timestamp_ps);
  if (t1 <= t0) {
    // Degenerate overlap (e.g. near-empty streams); fall back to the union
    // span so normalization stays finite.
    t0 = std::min(a.events.front().timestamp_ps, b.events.front().timestamp_ps);
    t1 = std::max(a.events.back().timestamp_ps, b.events.back().timestamp_ps);
  }
  if (t1 <= t0) t1 = t0 + 1;

  const double span_s = static_cast<double>(t1 - t0) * 1e-12;
  NormInfo info;
  info.overlap_ps = t1 - t0;
  info.rate_a_hz =
      static_cast<double>(count_in_window(a.events, t0, t1)) / span_s;
  info.rate_b_hz =
      static_cast<double>(count_in_window(b.events, t0, t1)) / span_s;
  info.pair_norm = info.rate_a_hz * info.rate_b_hz *
                   (static_cast<double>(bin_width_ps) * 1e-12) * span_s;
  return info;
}

void check_inputs(const TimeTagStream& a, const TimeTagStream& b,
                  std::int64_t bin_width_ps, std::int64_t max_tau_ps) {
  if (bin_width_ps < 1) throw std::invalid_argument("bin_width must be >= 1 ps");
  if (max_tau_ps < bin_width_ps)
    throw std::invalid_argument("max_tau must be >= bin_width");
  if (a.events.empty() || b.events.empty())
    throw std::invalid_argument(
        "empty input stream: measured rate is zero, g2 is undefined");
  if (!a.is_sorted() || !b.is_sorted())
    throw std::invalid_argument("input streams must be sorted by timestamp");
}

CorrelationHistogram finalize(std::vector<std::uint64_t> counts,
                              std::int64_t bin_width_ps, std::int64_t half_bins,
                              const NormInfo& norm) {
  CorrelationHistogram hist;
  hist.bin_width_ps = bin_width_ps;
  hist.half_bins = half_bins;
  hist.counts = std::move(counts);
  hist.rate_a_hz = norm.rate_a_hz;
  hist.rate_b_hz = norm.rate_b_hz;
  hist.overlap_ps = norm.overlap_ps;
  hist.pair_norm = norm.pair_norm;
  hist.g2.resize(hist.counts.size());
  hist.sigma.resize(hist.counts.size());
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    const double c = static_cast<double>(hist.counts[i]);
    hist.g2[i] = c / norm.pair_norm;
    // zero-count bins get the counts = 1 upper-bound convention
    if (hist.counts[i] == 0) hist.zero_count_bins_flagged = true;
    hist.sigma[i] = std::sqrt(std::max(c, 1.0)) / norm.pair_norm;
  }
  return hist;
}

}  // namespace

CorrelationHistogram correlate(const TimeTagStream& a, const TimeTagStream& b,
                               std::int64_t bin_width_ps, std::int64_t max_tau_ps,
                               bool same_stream) {
  check_inputs(a, b, bin_width_ps, max_tau_ps);
  const std::int64_t half_bins = max_tau_ps / bin_width_ps;
  const std::int64_t two_bw = 2 * bin_width_ps;
  // widest tau that can land in a kept bin
  const std::int64_t reach = half_bins * bin_width_ps + bin_width_ps / 2 + 1;

  std::vector<std::uint64_t> counts(static_cast<std::size_t>(2 * half_bins + 1), 0);
  const auto& ea = a.events;
  const auto& eb = b.events;

  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    const std::int64_t ta = ea[i].timestamp_ps;
    while (lo < eb.size() && eb[lo].timestamp_ps < ta - reach) ++lo;
    if (hi < lo) hi = lo;
    while (hi < eb.size() && eb[hi].timestamp_ps <= ta + reach) ++hi;
    for (std::size_t j = lo; j < hi; ++j) {
      if (same_stream && j == i) continue;
      const std::int64_t tau = eb[j].timestamp_ps - ta;
      const std::int64_t k = floor_div(2 * tau + bin_width_ps, two_bw);
      if (k >= -half_bins && k <= half_bins)
        ++counts[static_cast<std::size_t>(k + half_bins)];
    }
  }

  return finalize(std::move(counts), bin_width_ps, half_bins,
                  normalization(a, b, bin_width_ps));
}

CorrelationHistogram brute_force_correlate(const TimeTagStream& a,
                                           const TimeTagStream& b,
                                           std::int64_t bin_width_ps,
                                           std::int64_t max_tau_ps,
                                           bool same_stream) {
  check_inputs(a, b, bin_width_ps, max_tau_ps);
  if (a.events.size() > 100000 || b.events.size() > 100000)
    throw std::invalid_argument(
        "brute_force_correlate is limited to 1e5 events per stream");
  const std::int64_t half_bins = max_tau_ps / bin_width_ps;
  const std::int64_t two_bw = 2 * bin_width_ps;

  std::vector<std::uint64_t> counts(static_cast<std::size_t>(2 * half_bins + 1), 0);
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    for (std::size_t j = 0; j < b.events.size(); ++j) {
      if (same_stream && j == i) continue;
      const std::int64_t tau =
          b.events[j].timestamp_ps - a.events[i].timestamp_ps;
      const std::int64_t k = floor_div(2 * tau + bin_width_ps, two_bw);
      if (k >= -half_bins && k <= half_bins)
        ++counts[static_cast<std::size_t>(k + half_bins)];
    }
  }

  return finalize(std::move(counts), bin_width_ps, half_bins,
                  normalization(a, b, bin_width_ps));
}

ValueWithSigma g2_at_zero(const CorrelationHistogram& hist, std::size_t window_bins) {
  if (window_bins == 0 || window_bins % 2 == 0)
    throw std::invalid_argument("window_bins must be odd");
  if (window_bins > hist.bin_count())
    throw std::invalid_argument("window_bins exceeds histogram size");
  const std::size_t mid = hist.bin_count() / 2;
  const std::size_t lo = mid - window_bins / 2;

  std::uint64_t total = 0;
  double sum = 0.0;
  double var = 0.0;
  for (std::size_t i = lo; i < lo + window_bins; ++i) {
    total += hist.counts[i];
    sum += hist.g2[i];
    var += hist.sigma[i] * hist.sigma[i];
  }
  if (total == 0)
    throw std::runtime_error("central bins are empty; g2(0) is undefined");
  const double n = static_cast<double>(window_bins);
  return ValueWithSigma{sum / n, std::sqrt(var) / n};
}

void save_histogram_json(const CorrelationHistogram& hist, const std::string& path) {
  nlohmann::json j;
  std::vector<double> edges;
  edges.reserve(hist.bin_count() + 1);
  for (std::size_t i = 0; i < hist.bin_count(); ++i)
    edges.push_back(hist.bin_edge_low_ps(i));
  edges.push_back(hist.bin_edge_low_ps(hist.bin_count() - 1) +
                  static_cast<double>(hist.bin_width_ps));
  j["bin_edges_ps"] = edges;
  j["bin_width_ps"] = hist.bin_width_ps;
  j["half_bins"] = hist.half_bins;
  j["counts"] = hist.counts;
  j["g2"] = hist.g2;
  j["sigma"] = hist.sigma;
  j["meta"] = {{"rate_a_hz", hist.rate_a_hz},
               {"rate_b_hz", hist.rate_b_hz},
               {"overlap_ps", hist.overlap_ps},
               {"pair_norm", hist.pair_norm},
               {"zero_count_bins_flagged", hist.zero_count_bins_flagged},
               {"label", hist.label}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write histogram file: " + path);
  out << j.dump(2) << "\n";
}

CorrelationHistogram load_histogram_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open histogram file: " + path);
  nlohmann::json j;
  in >> j;
  CorrelationHistogram hist;
  hist.bin_width_ps = j.at("bin_width_ps").get<std::int64_t>();
  hist.half_bins = j.at("half_bins").get<std::int64_t>();
  hist.counts = j.at("counts").get<std::vector<std::uint64_t>>();
  hist.g2 = j.at("g2").get<std::vector<double>>();
  hist.sigma = j.at("sigma").get<std::vector<double>>();
  const auto& meta = j.at("meta");
  hist.rate_a_hz = meta.at("rate_a_hz").get<double>();
  hist.rate_b_hz = meta.at("rate_b_hz").get<double>();
  hist.overlap_ps = meta.at("overlap_ps").get<std::int64_t>();
  hist.pair_norm = meta.at("pair_norm").get<double>();
  hist.zero_count_bins_flagged = meta.at("zero_count_bins_flagged").get<bool>();
  hist.label = meta.value("label", std::string{});
  if (hist.counts.size() != hist.g2.size() ||
      hist.counts.size() != hist.sigma.size() ||
      hist.counts.size() != static_cast<std::size_t>(2 * hist.half_bins + 1))
    throw std::runtime_error("inconsistent histogram file: " + path);
  return hist;
}

}  // namespace vibronic
