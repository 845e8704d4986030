#include "vibronic/lineshape.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "vibronic/constants.hpp"
#include "vibronic/fft.hpp"

namespace vibronic {

std::string to_string(PrefactorMode mode) {
  switch (mode) {
    case PrefactorMode::kCrossSection: return "cross_section";
    case PrefactorMode::kRateCubed: return "rate_cubed";
    case PrefactorMode::kNone: return "none";
  }
  return "none";
}

PrefactorMode prefactor_mode_from_string(const std::string& s) {
  if (s == "cross_section") return PrefactorMode::kCrossSection;
  if (s == "rate_cubed") return PrefactorMode::kRateCubed;
  if (s == "none") return PrefactorMode::kNone;
  throw std::invalid_argument("unknown prefactor mode: " + s);
}

void LineshapeParams::validate() const {
  if (huang_rhys < 0.0) throw std::invalid_argument("huang_rhys must be >= 0");
  if (temperature_k < 0.0) throw std::invalid_argument("temperature must be >= 0");
  if (zpl_fwhm_mev <= 0.0) throw std::invalid_argument("zpl_fwhm must be > 0");
  if (zpl_energy_ev <= 0.0) throw std::invalid_argument("zpl_energy must be > 0");
  if (acoustic_s < 0.0) throw std::invalid_argument("acoustic_s must be >= 0");
  if (acoustic_cutoff_mev <= 0.0)
    throw std::invalid_argument("acoustic_cutoff must be > 0");
  if (redshift_min_mev >= redshift_max_mev)
    throw std::invalid_argument("empty redshift window");
  if (span_factor < 10.0)
    throw std::invalid_argument("span_factor below 10 cannot resolve the ZPL");
  if (step_divisor < 24.0)
    throw std::invalid_argument("step_divisor below 24 aliases multi-phonon sums");
}

SpectralDensity::SpectralDensity(const PhononDOS& dos, double low_cutoff_mev) {
  dos.validate();
  const std::size_t n = dos.energies_mev.size();
  energies_mev_.reserve(n);
  weights_.reserve(n);

  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = dos.energies_mev[i];
    double coeff;  // trapezoid quadrature coefficient
    if (i == 0)
      coeff = 0.5 * (dos.energies_mev[1] - dos.energies_mev[0]);
    else if (i == n - 1)
      coeff = 0.5 * (dos.energies_mev[n - 1] - dos.energies_mev[n - 2]);
    else
      coeff = 0.5 * (dos.energies_mev[i + 1] - dos.energies_mev[i - 1]);

    const double density = e >= low_cutoff_mev ? dos.values[i] / (e * e) : 0.0;
    const double w = coeff * density;
    if (w > 0.0) {
      energies_mev_.push_back(e);
      weights_.push_back(w);
      norm += w;
    }
  }
  if (norm <= 0.0)
    throw std::invalid_argument(
        "DOS has no weight above the low-energy cutoff");
  for (double& w : weights_) w /= norm;
  max_energy_mev_ = energies_mev_.back();
}

SpectralDensity SpectralDensity::acoustic(double cutoff_mev) {
  if (cutoff_mev <= 0.0)
    throw std::invalid_argument("acoustic cutoff must be > 0");
  SpectralDensity sd;
  const std::size_t n = 2000;
  const double emax = 30.0 * cutoff_mev;
  const double de = emax / static_cast<double>(n);
  double norm = 0.0;
  sd.energies_mev_.reserve(n);
  sd.weights_.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double e = de * static_cast<double>(i);
    const double w = e * std::exp(-e / cutoff_mev) * de;
    sd.energies_mev_.push_back(e);
    sd.weights_.push_back(w);
    norm += w;
  }
  for (double& w : sd.weights_) w /= norm;
  sd.max_energy_mev_ = emax;
  return sd;
}

std::complex<double> SpectralDensity::zeta(double t, double temperature_k) const {
  std::complex<double> acc(0.0, 0.0);
  for (std::size_t i = 0; i < energies_mev_.size(); ++i) {
    const double e = energies_mev_[i];
    const double occ = bose_occupation(e, temperature_k);
    const std::complex<double> phase(std::cos(e * t), std::sin(e * t));
    acc += weights_[i] * ((occ + 1.0) * phase + occ * std::conj(phase));
  }
  return acc;
}

std::vector<std::complex<double>> SpectralDensity::zeta_series(
    double dt, std::size_t n, double temperature_k) const {
  std::vector<std::complex<double>> acc(n, std::complex<double>(0.0, 0.0));
  for (std::size_t i = 0; i < energies_mev_.size(); ++i) {
    const double e = energies_mev_[i];
    const double occ = bose_occupation(e, temperature_k);
    const double cp = weights_[i] * (occ + 1.0);
    const double cm = weights_[i] * occ;
    const std::complex<double> step(std::cos(e * dt), std::sin(e * dt));
    std::complex<double> phase(1.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      acc[j] += cp * phase + cm * std::conj(phase);
      phase *= step;
      if ((j & 0xFFF) == 0xFFF) {
        // keep |phase| = 1 against rounding drift
        const double t = dt * static_cast<double>(j + 1);
        phase = std::complex<double>(std::cos(e * t), std::sin(e * t));
      }
    }
  }
  return acc;
}

std::complex<double> zeta(double t, const PhononDOS& dos, double temperature_k,
                          double low_cutoff_mev) {
  return SpectralDensity(dos, low_cutoff_mev).zeta(t, temperature_k);
}

namespace {

double segment_integral(const std::vector<double>& x, const std::vector<double>& y,
                        double lo, double hi) {
  // trapezoid integral of the piecewise-linear (x, y) over [lo, hi]
  if (hi <= lo) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double a = std::max(x[i - 1], lo);
    const double b = std::min(x[i], hi);
    if (b <= a) continue;
    const double span = x[i] - x[i - 1];
    auto value_at = [&](double t) {
      const double f = (t - x[i - 1]) / span;
      return y[i - 1] + f * (y[i] - y[i - 1]);
    };
    sum += 0.5 * (value_at(a) + value_at(b)) * (b - a);
  }
  return sum;
}

}  // namespace

Spectrum synthesize_spectrum(const LineshapeParams& params, const PhononDOS& dos) {
  params.validate();
  const double S = params.huang_rhys;
  const double gamma = params.zpl_fwhm_mev;

  const bool use_lattice = S > 0.0;
  const bool use_acoustic = params.acoustic_s > 0.0;

  std::unique_ptr<SpectralDensity> lattice;
  std::unique_ptr<SpectralDensity> acoustic;
  double omega_max = 1.0;
  if (use_lattice) {
    lattice = std::make_unique<SpectralDensity>(dos, params.dos_low_cutoff_mev);
    omega_max = std::max(omega_max, lattice->max_energy_mev());
  }
  if (use_acoustic) {
    acoustic = std::make_unique<SpectralDensity>(
        SpectralDensity::acoustic(params.acoustic_cutoff_mev));
    omega_max = std::max(omega_max, 10.0 * params.acoustic_cutoff_mev);
  }

  // The time step must also keep the Nyquist range above the requested
  // output window (matters when the phonon terms are off or weak).
  const double max_shift = std::max(std::abs(params.redshift_min_mev),
                                    std::abs(params.redshift_max_mev));
  omega_max = std::max(omega_max, 1.05 * max_shift / (params.step_divisor * kPi));

  const double dt = 1.0 / (params.step_divisor * omega_max);
  const double t_half = params.span_factor / gamma;
  std::size_t n = 2;
  while (static_cast<double>(n / 2) * dt < t_half) {
    n <<= 1;
    if (n > (1u << 24))
      throw std::runtime_error(
          "time grid cannot resolve zpl_fwhm and cover the DOS bandwidth at "
          "once; increase zpl_fwhm or relax span_factor/step_divisor");
  }
  const std::size_t half = n / 2;

  // Nyquist must cover the requested redshift window.
  const double nyquist = kPi / dt;
  if (std::max(std::abs(params.redshift_min_mev),
               std::abs(params.redshift_max_mev)) >= nyquist)
    throw std::runtime_error("redshift window exceeds the spectral Nyquist range");

  std::vector<std::complex<double>> zl, za;
  double zl0 = 0.0, za0 = 0.0;
  if (use_lattice) {
    zl = lattice->zeta_series(dt, half + 1, params.temperature_k);
    zl0 = zl[0].real();
  }
  if (use_acoustic) {
    za = acoustic->zeta_series(dt, half + 1, params.temperature_k);
    za0 = za[0].real();
  }

  // Generating function on t >= 0; negative times by Hermitian symmetry.
  std::vector<std::complex<double>> g(n);
  for (std::size_t j = 0; j <= half; ++j) {
    const double t = dt * static_cast<double>(j);
    std::complex<double> expo(-0.5 * gamma * t, 0.0);
    if (use_lattice) expo += S * (zl[j] - zl0);
    if (use_acoustic) expo += params.acoustic_s * (za[j] - za0);
    const std::complex<double> value = std::exp(expo);
    if (j == 0) {
      g[0] = value;
    } else if (j == half) {
      g[half] = std::complex<double>(value.real(), 0.0);
    } else {
      g[j] = value;
      g[n - j] = std::conj(value);
    }
  }

  fft_inplace(g);

  const double d_omega = 2.0 * kPi / (static_cast<double>(n) * dt);
  const double scale = dt / (2.0 * kPi);

  // Collect the requested redshift window, descending in redshift so the
  // photon-energy grid comes out ascending.
  std::vector<double> energies;
  std::vector<double> intensities;
  const long nn = static_cast<long>(n);
  const long k_hi = static_cast<long>(std::floor(params.redshift_max_mev / d_omega));
  const long k_lo = static_cast<long>(std::ceil(params.redshift_min_mev / d_omega));

  double peak = 0.0;
  double most_negative = 0.0;
  for (long k = k_hi; k >= k_lo; --k) {
    const long idx = k >= 0 ? k : k + nn;
    const double value = g[static_cast<std::size_t>(idx)].real() * scale;
    peak = std::max(peak, value);
    most_negative = std::min(most_negative, value);
    const double redshift = d_omega * static_cast<double>(k);
    energies.push_back(params.zpl_energy_ev - redshift / 1000.0);
    intensities.push_back(value);
  }
  if (peak <= 0.0) throw std::runtime_error("synthesized spectrum is empty");
  if (most_negative < -1e-9 * peak)
    throw std::runtime_error(
        "spectrum has negative excursions beyond numerical tolerance; the "
        "time/frequency grids are misconfigured");

  for (std::size_t i = 0; i < intensities.size(); ++i) {
    double v = std::max(intensities[i], 0.0) * params.amplitude;
    const double e = energies[i];
    switch (params.prefactor_mode) {
      case PrefactorMode::kCrossSection:
        v = e > 0.0 ? v / e : 0.0;
        break;
      case PrefactorMode::kRateCubed:
        v = e > 0.0 ? v * e * e * e : 0.0;
        break;
      case PrefactorMode::kNone:
        break;
    }
    intensities[i] = v;
  }

  Spectrum spectrum;
  spectrum.energies_ev = std::move(energies);
  spectrum.intensities = std::move(intensities);
  spectrum.params = params;
  return spectrum;
}

double debye_waller_fraction(const Spectrum& spectrum, double zpl_window_mev) {
  if (zpl_window_mev < 3.0 * spectrum.params.zpl_fwhm_mev)
    throw std::invalid_argument("zpl_window must be at least 3x zpl_fwhm");
  const double zpl = spectrum.params.zpl_energy_ev;
  const double lo = zpl - zpl_window_mev / 1000.0;
  const double hi = zpl + zpl_window_mev / 1000.0;
  if (lo < spectrum.energies_ev.front() || hi > spectrum.energies_ev.back())
    throw std::invalid_argument("zpl_window exceeds the spectral range");
  const double total =
      segment_integral(spectrum.energies_ev, spectrum.intensities,
                       spectrum.energies_ev.front(), spectrum.energies_ev.back());
  if (total <= 0.0) throw std::runtime_error("spectrum has zero total weight");
  return segment_integral(spectrum.energies_ev, spectrum.intensities, lo, hi) /
         total;
}

std::vector<double> band_weights(
    const Spectrum& spectrum,
    const std::vector<std::pair<double, double>>& bands_ev) {
  std::vector<std::pair<double, double>> sorted = bands_ev;
  for (const auto& b : sorted) {
    if (b.second <= b.first) throw std::invalid_argument("band with empty range");
    if (b.first < spectrum.energies_ev.front() ||
        b.second > spectrum.energies_ev.back())
      throw std::invalid_argument("band outside the spectral range");
  }
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].first < sorted[i - 1].second)
      throw std::invalid_argument("bands overlap");
  }

  const double total =
      segment_integral(spectrum.energies_ev, spectrum.intensities,
                       spectrum.energies_ev.front(), spectrum.energies_ev.back());
  if (total <= 0.0) throw std::runtime_error("spectrum has zero total weight");

  std::vector<double> weights;
  weights.reserve(bands_ev.size());
  for (const auto& b : bands_ev)
    weights.push_back(
        segment_integral(spectrum.energies_ev, spectrum.intensities, b.first,
                         b.second) /
        total);
  return weights;
}

void save_spectrum_csv(const Spectrum& spectrum, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write spectrum file: " + path);
  out << "energy_eV,intensity\n";
  out.precision(12);
  for (std::size_t i = 0; i < spectrum.energies_ev.size(); ++i)
    out << spectrum.energies_ev[i] << "," << spectrum.intensities[i] << "\n";
}

void save_spectrum_sidecar_json(const Spectrum& spectrum, const std::string& path) {
  const LineshapeParams& p = spectrum.params;
  nlohmann::json j{{"huang_rhys", p.huang_rhys},
                   {"temperature_K", p.temperature_k},
                   {"zpl_energy_eV", p.zpl_energy_ev},
                   {"zpl_fwhm_meV", p.zpl_fwhm_mev},
                   {"amplitude", p.amplitude},
                   {"acoustic_s", p.acoustic_s},
                   {"acoustic_cutoff_meV", p.acoustic_cutoff_mev},
                   {"dos_low_cutoff_meV", p.dos_low_cutoff_mev},
                   {"prefactor_mode", to_string(p.prefactor_mode)},
                   {"redshift_min_meV", p.redshift_min_mev},
                   {"redshift_max_meV", p.redshift_max_mev},
                   {"span_factor", p.span_factor},
                   {"step_divisor", p.step_divisor}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sidecar file: " + path);
  out << j.dump(2) << "\n";
}

Spectrum load_spectrum_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spectrum file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("energy_eV,intensity", 0) != 0)
    throw std::runtime_error("spectrum file missing header: " + path);
  Spectrum s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double e, v;
    char comma;
    if (!(ss >> e >> comma >> v) || comma != ',')
      throw std::runtime_error("malformed spectrum row in " + path);
    s.energies_ev.push_back(e);
    s.intensities.push_back(v);
  }
  if (s.energies_ev.size() < 2)
    throw std::runtime_error("spectrum file too short: " + path);
  return s;
}

}  // namespace vibronic
