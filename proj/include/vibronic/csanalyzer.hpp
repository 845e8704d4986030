#pragma once

#include <string>

#include "vibronic/fitter.hpp"

namespace vibronic {

enum class CSClass { kClassical, kViolation, kInconclusive };

std::string to_string(CSClass c);

struct CSThresholds {
  double violation_probability = 0.95;
  double classical_probability = 0.05;
};

// Verdict for one band pair (l, m) from the three fitted zero-delay values.
struct CSVerdict {
  double ratio_median = 0.0;       // R = g2_lm(0)^2 / (g2_ll(0) g2_mm(0))
  double ratio_q025 = 0.0;
  double ratio_q975 = 0.0;
  double probability_violation = 0.0;  // P(R > 1) over matched posterior draws
  CSClass classification = CSClass::kInconclusive;
  std::string diagnostic;
};

// Matched-draw Cauchy-Schwarz test: deterministic, symmetric in (ll, mm)
// and scale invariant. Posteriors with more than 1% of their g2(0) mass at
// zero come back inconclusive with a divide-by-zero diagnostic.
CSVerdict cs_check(const PosteriorSummary& posterior_ll,
                   const PosteriorSummary& posterior_mm,
                   const PosteriorSummary& posterior_lm,
                   const CSThresholds& thresholds = {});

void save_verdict_json(const CSVerdict& verdict, const std::string& path);
CSVerdict load_verdict_json(const std::string& path);

}  // namespace vibronic
