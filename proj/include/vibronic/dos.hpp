#pragma once

#include <string>
#include <vector>

namespace vibronic {

// Tabulated one-phonon density of states on a strictly increasing
// energy grid (meV). Normalization is arbitrary.
struct PhononDOS {
  std::vector<double> energies_mev;
  std::vector<double> values;

  void validate() const;
};

struct LorentzianPeak {
  double center_mev = 0.0;
  double fwhm_mev = 0.0;
  double weight = 0.0;
};

// Multiplicative reweighting of a DOS by a sum of peak-normalized
// Lorentzians, one per dominant one-phonon mode.
struct ReweightSpec {
  std::vector<LorentzianPeak> peaks;

  void validate(const PhononDOS& dos) const;
};

// Thermal mean phonon occupation 1/(exp(E/kT) - 1); exactly 0 at T = 0.
double bose_occupation(double energy_mev, double temperature_k);

// Applies the Lorentzian reweighting and rescales so the total integral
// of the DOS is preserved.
PhononDOS reweight_dos(const PhononDOS& dos, const ReweightSpec& spec);

PhononDOS load_dos_csv(const std::string& path);
void save_dos_csv(const PhononDOS& dos, const std::string& path);

ReweightSpec load_reweight_json(const std::string& path);

}  // namespace vibronic
