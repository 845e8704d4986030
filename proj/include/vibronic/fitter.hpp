#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vibronic/correlator.hpp"

namespace vibronic {

// Two-level model g2(tau) = b - a * exp(-|tau - t0| / tau_d).
struct G2Model {
  double amplitude = 0.0;   // a, antibunching depth
  double tau_d_ps = 4000.0; // recovery time constant
  double baseline = 1.0;    // b, tail level
  double center_ps = 0.0;   // t0

  double value(double tau_ps) const;
};

struct G2Priors {
  double amplitude_min = 0.0;
  double amplitude_max = 1.05;
  double tau_d_min_ps = 100.0;     // 0.1 ns
  double tau_d_max_ps = 1e6;       // 1 us
  double baseline_mean = 1.0;
  double baseline_sigma = 0.1;
  double center_halfwidth_bins = 5.0;
  double norm_log_halfwidth = 4.605;  // ln(100): kappa within 100x of measured
};

struct SamplerSettings {
  std::size_t chains = 4;
  std::size_t burn_in = 5000;
  std::size_t samples_per_chain = 5000;
  std::size_t max_stored_draws = 4000;
  std::uint64_t seed = 0;
};

struct PosteriorSummary {
  // stored (possibly thinned) posterior draws, column per parameter
  std::vector<double> amplitude;
  std::vector<double> tau_d_ps;
  std::vector<double> baseline;
  std::vector<double> center_ps;
  std::vector<double> norm;      // kappa, expected counts at g2 = 1
  std::vector<double> g2_zero;   // b - a per draw

  // median model curve and central 95% band on the histogram grid
  std::vector<double> tau_grid_ps;
  std::vector<double> curve_median;
  std::vector<double> curve_low;
  std::vector<double> curve_high;

  std::map<std::string, double> rhat;
  double acceptance_rate = 0.0;
  double min_ess = 0.0;
  bool converged = false;

  const std::vector<double>& draws(const std::string& name) const;
};

PosteriorSummary fit_g2(const CorrelationHistogram& hist, const G2Priors& priors,
                        const SamplerSettings& sampler);

// Central credible interval of one parameter (or "g2_zero").
std::pair<double, double> credible_interval(const PosteriorSummary& summary,
                                            const std::string& quantity,
                                            double level);

double sample_median(const std::vector<double>& draws);
double sample_quantile(std::vector<double> draws, double q);
double sample_stddev(const std::vector<double>& draws);

void save_posterior_json(const PosteriorSummary& summary, const std::string& path);
PosteriorSummary load_posterior_json(const std::string& path);

}  // namespace vibronic
