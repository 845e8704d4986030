#include "vibronic/csanalyzer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace vibronic {

std::string to_string(CSClass c) {
  switch (c) {
    case CSClass::kClassical: return "classical";
    case CSClass::kViolation: return "violation";
    case CSClass::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

double zero_mass_fraction(const std::vector<double>& draws) {
  std::size_t at_zero = 0;
  for (double v : draws) {
    if (v <= 0.0) ++at_zero;
  }
  return static_cast<double>(at_zero) / static_cast<double>(draws.size());
}

}  // namespace

CSVerdict cs_check(const PosteriorSummary& posterior_ll,
                   const PosteriorSummary& posterior_mm,
                   const PosteriorSummary& posterior_lm,
                   const CSThresholds& thresholds) {
  const auto& ll = posterior_ll.g2_zero;
  const auto& mm = posterior_mm.g2_zero;
  const auto& lm = posterior_lm.g2_zero;
  if (ll.empty() || mm.empty() || lm.empty())
    throw std::invalid_argument("cs_check requires nonempty posterior draws");
  if (!posterior_ll.converged || !posterior_mm.converged ||
      !posterior_lm.converged)
    throw std::invalid_argument("cs_check requires converged posteriors");

  CSVerdict verdict;
  if (zero_mass_fraction(ll) > 0.01 || zero_mass_fraction(mm) > 0.01) {
    verdict.classification = CSClass::kInconclusive;
    verdict.diagnostic =
        "autocorrelation g2(0) posterior has mass at zero; ratio would divide "
        "by zero";
    verdict.probability_violation = 0.5;
    return verdict;
  }

  // Matched draws: index-coupled cycling through the three sample arrays.
  // Deterministic, symmetric under (ll, mm) exchange, scale invariant.
  const std::size_t n = std::max({ll.size(), mm.size(), lm.size()});
  std::vector<double> ratios;
  ratios.reserve(n);
  std::size_t above = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lm[i % lm.size()];
    const double y = ll[i % ll.size()];
    const double z = mm[i % mm.size()];
    const double denom = y * z;
    if (denom <= 0.0) continue;
    const double r = x * x / denom;
    ratios.push_back(r);
    if (r > 1.0) ++above;
  }
  if (ratios.empty())
    throw std::runtime_error("no valid ratio draws in cs_check");

  verdict.probability_violation =
      static_cast<double>(above) / static_cast<double>(ratios.size());
  verdict.ratio_median = sample_quantile(ratios, 0.5);
  verdict.ratio_q025 = sample_quantile(ratios, 0.025);
  verdict.ratio_q975 = sample_quantile(ratios, 0.975);

  if (verdict.probability_violation >= thresholds.violation_probability)
    verdict.classification = CSClass::kViolation;
  else if (verdict.probability_violation <= thresholds.classical_probability)
    verdict.classification = CSClass::kClassical;
  else
    verdict.classification = CSClass::kInconclusive;
  return verdict;
}

void save_verdict_json(const CSVerdict& verdict, const std::string& path) {
  nlohmann::json j{{"ratio_median", verdict.ratio_median},
                   {"ratio_q025", verdict.ratio_q025},
                   {"ratio_q975", verdict.ratio_q975},
                   {"probability_violation", verdict.probability_violation},
                   {"classification", to_string(verdict.classification)},
                   {"diagnostic", verdict.diagnostic}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write verdict file: " + path);
  out << j.dump(2) << "\n";
}

CSVerdict load_verdict_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open verdict file: " + path);
  nlohmann::json j;
  in >> j;
  CSVerdict v;
  v.ratio_median = j.at("ratio_median").get<double>();
  v.ratio_q025 = j.at("ratio_q025").get<double>();
  v.ratio_q975 = j.at("ratio_q975").get<double>();
  v.probability_violation = j.at("probability_violation").get<double>();
  const std::string c = j.at("classification").get<std::string>();
  if (c == "classical") v.classification = CSClass::kClassical;
  else if (c == "violation") v.classification = CSClass::kViolation;
  else v.classification = CSClass::kInconclusive;
  v.diagnostic = j.value("diagnostic", std::string{});
  return v;
}

}  // namespace vibronic
