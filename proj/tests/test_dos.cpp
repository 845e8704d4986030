#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "vibronic/constants.hpp"
#include "vibronic/dos.hpp"

using namespace vibronic;

namespace {

PhononDOS uniform_dos(double lo, double hi, std::size_t n, double value = 1.0) {
  PhononDOS dos;
  for (std::size_t i = 0; i < n; ++i) {
    dos.energies_mev.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                        static_cast<double>(n - 1));
    dos.values.push_back(value);
  }
  return dos;
}

double trapz(const PhononDOS& d) {
  double s = 0.0;
  for (std::size_t i = 1; i < d.energies_mev.size(); ++i)
    s += 0.5 * (d.values[i] + d.values[i - 1]) *
         (d.energies_mev[i] - d.energies_mev[i - 1]);
  return s;
}

}  // namespace

TEST_CASE("bose occupation limits and values") {
  CHECK(bose_occupation(166.0, 0.0) == 0.0);

  // independent evaluation of 1/(e^x - 1)
  const double x300 = 166.0 / (kBoltzmannMeVPerK * 300.0);
  CHECK(bose_occupation(166.0, 300.0) ==
        doctest::Approx(1.0 / (std::exp(x300) - 1.0)).epsilon(1e-12));
  CHECK(bose_occupation(166.0, 300.0) == doctest::Approx(1.63e-3).epsilon(0.01));

  CHECK(bose_occupation(10.0, 3.6) == doctest::Approx(1.0e-14).epsilon(0.05));

  CHECK_THROWS_AS(bose_occupation(0.0, 300.0), std::domain_error);
  CHECK_THROWS_AS(bose_occupation(-5.0, 300.0), std::domain_error);
  CHECK_THROWS_AS(bose_occupation(10.0, -1.0), std::domain_error);
}

TEST_CASE("DOS validation") {
  PhononDOS dos;
  dos.energies_mev = {1.0};
  dos.values = {1.0};
  CHECK_THROWS(dos.validate());  // too short

  dos = uniform_dos(0.0, 10.0, 5);
  CHECK_THROWS(dos.validate());  // nonpositive first energy

  dos = uniform_dos(1.0, 10.0, 5);
  dos.energies_mev[2] = dos.energies_mev[1];
  CHECK_THROWS(dos.validate());  // not strictly increasing

  dos = uniform_dos(1.0, 10.0, 5, 0.0);
  CHECK_THROWS(dos.validate());  // identically zero

  dos = uniform_dos(1.0, 10.0, 5);
  dos.values[3] = -0.1;
  CHECK_THROWS(dos.validate());  // negative value

  CHECK_NOTHROW(uniform_dos(1.0, 10.0, 5).validate());
}

TEST_CASE("reweight with one huge flat Lorentzian keeps the DOS shape") {
  PhononDOS dos = uniform_dos(10.0, 200.0, 100);
  for (std::size_t i = 0; i < dos.values.size(); ++i)
    dos.values[i] = 1.0 + 0.01 * static_cast<double>(i % 7);

  ReweightSpec spec;
  spec.peaks.push_back({100.0, 1e7, 1.0});
  const PhononDOS out = reweight_dos(dos, spec);

  const double scale = out.values[0] / dos.values[0];
  for (std::size_t i = 0; i < dos.values.size(); ++i)
    CHECK(out.values[i] == doctest::Approx(scale * dos.values[i]).epsilon(1e-6));
}

TEST_CASE("reweight of a uniform DOS peaks exactly at the Lorentzian centers") {
  PhononDOS dos = uniform_dos(10.0, 210.0, 401);  // 0.5 meV grid
  ReweightSpec spec;
  spec.peaks.push_back({166.0, 5.0, 1.0});
  spec.peaks.push_back({177.0, 5.0, 0.8});
  spec.peaks.push_back({200.0, 5.0, 1.2});
  const PhononDOS out = reweight_dos(dos, spec);

  std::vector<double> maxima;
  for (std::size_t i = 1; i + 1 < out.values.size(); ++i) {
    if (out.values[i] > out.values[i - 1] && out.values[i] >= out.values[i + 1])
      maxima.push_back(out.energies_mev[i]);
  }
  REQUIRE(maxima.size() == 3);
  CHECK(maxima[0] == doctest::Approx(166.0).epsilon(0.005));
  CHECK(maxima[1] == doctest::Approx(177.0).epsilon(0.005));
  CHECK(maxima[2] == doctest::Approx(200.0).epsilon(0.005));
}

TEST_CASE("reweight preserves support and total integral") {
  PhononDOS dos = uniform_dos(10.0, 200.0, 96, 0.0);
  dos.values[40] = 3.0;  // single nonzero bin
  ReweightSpec spec;
  spec.peaks.push_back({dos.energies_mev[40], 4.0, 1.0});

  const PhononDOS out = reweight_dos(dos, spec);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (i == 40) CHECK(out.values[i] > 0.0);
    else CHECK(out.values[i] == 0.0);
  }
  CHECK(trapz(out) == doctest::Approx(trapz(dos)).epsilon(1e-12));
}

TEST_CASE("reweight spec validation") {
  PhononDOS dos = uniform_dos(10.0, 200.0, 20);

  ReweightSpec spec;
  CHECK_THROWS(reweight_dos(dos, spec));  // no peaks

  spec.peaks = {{500.0, 5.0, 1.0}};
  CHECK_THROWS(reweight_dos(dos, spec));  // center outside range

  spec.peaks = {{100.0, 0.0, 1.0}};
  CHECK_THROWS(reweight_dos(dos, spec));  // fwhm must be positive

  spec.peaks = {{100.0, 5.0, 0.0}};
  CHECK_THROWS(reweight_dos(dos, spec));  // weights all zero
}

TEST_CASE("DOS CSV round trip and format errors") {
  const std::string path = "test_dos_roundtrip.csv";
  PhononDOS dos = uniform_dos(1.5, 99.5, 33);
  for (std::size_t i = 0; i < dos.values.size(); ++i)
    dos.values[i] = 0.25 + 0.125 * static_cast<double>(i);
  save_dos_csv(dos, path);
  const PhononDOS back = load_dos_csv(path);
  REQUIRE(back.energies_mev.size() == dos.energies_mev.size());
  for (std::size_t i = 0; i < dos.values.size(); ++i) {
    CHECK(back.energies_mev[i] == doctest::Approx(dos.energies_mev[i]));
    CHECK(back.values[i] == doctest::Approx(dos.values[i]));
  }

  {
    std::ofstream f("test_dos_bad_header.csv");
    f << "energy,dos\n1,1\n2,1\n";
  }
  CHECK_THROWS(load_dos_csv("test_dos_bad_header.csv"));

  {
    std::ofstream f("test_dos_bad_row.csv");
    f << "energy_meV,dos\n1,1\nnot-a-number\n";
  }
  CHECK_THROWS(load_dos_csv("test_dos_bad_row.csv"));

  CHECK_THROWS(load_dos_csv("test_dos_does_not_exist.csv"));

  std::remove("test_dos_roundtrip.csv");
  std::remove("test_dos_bad_header.csv");
  std::remove("test_dos_bad_row.csv");
}

TEST_CASE("reweight JSON loading") {
  const std::string path = "test_reweight.json";
  {
    std::ofstream f(path);
    f << R"({"peaks": [
          {"center_meV": 166.0, "fwhm_meV": 5.0, "weight": 1.0},
          {"center_meV": 200.0, "fwhm_meV": 4.0, "weight": 1.4}]})";
  }
  const ReweightSpec spec = load_reweight_json(path);
  REQUIRE(spec.peaks.size() == 2);
  CHECK(spec.peaks[0].center_mev == 166.0);
  CHECK(spec.peaks[1].weight == 1.4);
  std::remove(path.c_str());
}
