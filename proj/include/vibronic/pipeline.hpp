#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vibronic/csanalyzer.hpp"
#include "vibronic/fitter.hpp"

namespace vibronic {

struct PipelineOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  int threads = 1;  // 0 = auto
};

struct PipelineResult {
  std::vector<std::string> band_labels;
  std::vector<double> band_weights;
  // keyed by band index pair (l <= m); diagonal entries are autocorrelation fits
  std::map<std::pair<std::size_t, std::size_t>, double> g2_zero_median;
  std::map<std::pair<std::size_t, std::size_t>, CSVerdict> verdicts;  // l < m
};

// lineshape -> band weights -> simulate -> correlate/fit all pairs ->
// cs-check all pairs, with a manifest in the output directory.
PipelineResult run_pipeline(const PipelineOptions& options);

}  // namespace vibronic
