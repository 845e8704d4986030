#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "vibronic/dos.hpp"

namespace vibronic {

enum class PrefactorMode { kCrossSection, kRateCubed, kNone };

std::string to_string(PrefactorMode mode);
PrefactorMode prefactor_mode_from_string(const std::string& s);

struct LineshapeParams {
  double huang_rhys = 0.0;        // S, dimensionless
  double temperature_k = 0.0;     // K
  double zpl_energy_ev = 2.21;    // electronic transition energy
  double zpl_fwhm_mev = 1.3;      // homogeneous linewidth
  double amplitude = 1.0;         // overall scale, arbitrary units
  double acoustic_s = 0.0;        // coupling of the phenomenological acoustic term
  double acoustic_cutoff_mev = 5.0;
  double dos_low_cutoff_mev = 5.0;  // lattice-DOS term below this is dropped
  PrefactorMode prefactor_mode = PrefactorMode::kNone;

  // Output window as redshift from the ZPL, meV. Stokes side positive.
  double redshift_min_mev = -300.0;
  double redshift_max_mev = 1400.0;

  // Time-grid controls. span_factor * 1/zpl_fwhm is the half-span of the
  // time grid; step_divisor sets dt = 1 / (step_divisor * max DOS energy).
  double span_factor = 40.0;
  double step_divisor = 24.0;

  void validate() const;
};

struct Spectrum {
  std::vector<double> energies_ev;  // strictly increasing
  std::vector<double> intensities;  // nonnegative, arbitrary units
  LineshapeParams params;
};

// Effective one-phonon spectral density w(Omega) = (rho/Omega^2) / norm,
// quadrature-ready. Built once per DOS; zeta(0) = 1 at T = 0.
class SpectralDensity {
 public:
  SpectralDensity(const PhononDOS& dos, double low_cutoff_mev);

  // Phenomenological acoustic density w(Omega) ~ Omega * exp(-Omega/cutoff).
  static SpectralDensity acoustic(double cutoff_mev);

  std::complex<double> zeta(double t_hbar_per_mev, double temperature_k) const;

  // zeta sampled on a uniform time grid t_j = j * dt, j in [0, n).
  std::vector<std::complex<double>> zeta_series(double dt, std::size_t n,
                                                double temperature_k) const;

  double max_energy_mev() const { return max_energy_mev_; }

 private:
  SpectralDensity() = default;

  std::vector<double> energies_mev_;
  std::vector<double> weights_;  // quadrature weight * density, normalized
  double max_energy_mev_ = 0.0;
};

std::complex<double> zeta(double t_hbar_per_mev, const PhononDOS& dos,
                          double temperature_k, double low_cutoff_mev = 5.0);

Spectrum synthesize_spectrum(const LineshapeParams& params, const PhononDOS& dos);

// Fraction of total spectral weight within +-zpl_window_mev of the ZPL.
double debye_waller_fraction(const Spectrum& spectrum, double zpl_window_mev);

// Integrated intensity fraction per band; bands must not overlap.
std::vector<double> band_weights(const Spectrum& spectrum,
                                 const std::vector<std::pair<double, double>>& bands_ev);

void save_spectrum_csv(const Spectrum& spectrum, const std::string& path);
void save_spectrum_sidecar_json(const Spectrum& spectrum, const std::string& path);
Spectrum load_spectrum_csv(const std::string& path);

}  // namespace vibronic
