#include "vibronic/dos.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "vibronic/constants.hpp"

namespace vibronic {

void PhononDOS::validate() const {
  if (energies_mev.size() < 2)
    throw std::invalid_argument("phonon DOS needs at least 2 grid points");
  if (energies_mev.size() != values.size())
    throw std::invalid_argument("phonon DOS grid/value length mismatch");
  if (energies_mev.front() <= 0.0)
    throw std::invalid_argument("phonon energies must be positive");
  for (std::size_t i = 1; i < energies_mev.size(); ++i) {
    if (energies_mev[i] <= energies_mev[i - 1])
      throw std::invalid_argument("phonon energy grid must be strictly increasing");
  }
  bool any_positive = false;
  for (double v : values) {
    if (v < 0.0) throw std::invalid_argument("DOS values must be nonnegative");
    if (v > 0.0) any_positive = true;
  }
  if (!any_positive) throw std::invalid_argument("DOS is identically zero");
}

void ReweightSpec::validate(const PhononDOS& dos) const {
  if (peaks.empty()) throw std::invalid_argument("reweight spec has no peaks");
  double total_weight = 0.0;
  for (const auto& p : peaks) {
    if (p.center_mev < dos.energies_mev.front() ||
        p.center_mev > dos.energies_mev.back())
      throw std::invalid_argument("reweight peak center outside DOS energy range");
    if (p.fwhm_mev <= 0.0) throw std::invalid_argument("reweight fwhm must be > 0");
    if (p.weight < 0.0) throw std::invalid_argument("reweight weight must be >= 0");
    total_weight += p.weight;
  }
  if (total_weight <= 0.0)
    throw std::invalid_argument("reweight weights are all zero");
}

double bose_occupation(double energy_mev, double temperature_k) {
  if (energy_mev <= 0.0)
    throw std::domain_error("bose_occupation requires positive energy");
  if (temperature_k < 0.0)
    throw std::domain_error("bose_occupation requires temperature >= 0");
  if (temperature_k == 0.0) return 0.0;
  const double x = energy_mev / (kBoltzmannMeVPerK * temperature_k);
  return 1.0 / std::expm1(x);
}

namespace {

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double sum = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i)
    sum += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return sum;
}

}  // namespace

PhononDOS reweight_dos(const PhononDOS& dos, const ReweightSpec& spec) {
  dos.validate();
  spec.validate(dos);

  PhononDOS out;
  out.energies_mev = dos.energies_mev;
  out.values.resize(dos.values.size());
  for (std::size_t i = 0; i < dos.values.size(); ++i) {
    double mult = 0.0;
    for (const auto& p : spec.peaks) {
      const double hw = 0.5 * p.fwhm_mev;
      const double d = dos.energies_mev[i] - p.center_mev;
      mult += p.weight * hw * hw / (d * d + hw * hw);  // peak-normalized
    }
    out.values[i] = dos.values[i] * mult;
  }

  const double before = trapezoid(dos.energies_mev, dos.values);
  const double after = trapezoid(out.energies_mev, out.values);
  if (after <= 0.0)
    throw std::invalid_argument("reweighting removed all DOS weight");
  const double scale = before / after;
  for (double& v : out.values) v *= scale;
  return out;
}

PhononDOS load_dos_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open DOS file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty DOS file: " + path);
  if (line.rfind("energy_meV,dos", 0) != 0)
    throw std::runtime_error("DOS file missing 'energy_meV,dos' header: " + path);

  PhononDOS dos;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    double e, v;
    char comma;
    if (!(ss >> e >> comma >> v) || comma != ',')
      throw std::runtime_error("malformed DOS row at line " +
                               std::to_string(lineno) + " in " + path);
    dos.energies_mev.push_back(e);
    dos.values.push_back(v);
  }
  dos.validate();
  return dos;
}

void save_dos_csv(const PhononDOS& dos, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write DOS file: " + path);
  out << "energy_meV,dos\n";
  out.precision(12);
  for (std::size_t i = 0; i < dos.energies_mev.size(); ++i)
    out << dos.energies_mev[i] << "," << dos.values[i] << "\n";
}

ReweightSpec load_reweight_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reweight file: " + path);
  nlohmann::json j;
  in >> j;
  ReweightSpec spec;
  for (const auto& p : j.at("peaks")) {
    LorentzianPeak peak;
    peak.center_mev = p.at("center_meV").get<double>();
    peak.fwhm_mev = p.at("fwhm_meV").get<double>();
    peak.weight = p.at("weight").get<double>();
    spec.peaks.push_back(peak);
  }
  return spec;
}

}  // namespace vibronic
