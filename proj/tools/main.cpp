#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "vibronic/correlator.hpp"
#include "vibronic/csanalyzer.hpp"
#include "vibronic/dos.hpp"
#include "vibronic/fitter.hpp"
#include "vibronic/lineshape.hpp"
#include "vibronic/manifest.hpp"
#include "vibronic/pipeline.hpp"
#include "vibronic/simulator.hpp"
#include "vibronic/timetag.hpp"

namespace {

constexpr int kExitViolation = 10;
constexpr int kExitInconclusive = 11;
constexpr int kExitUnconverged = 12;

// Seed resolution: --seed flag wins; VIBRONIC_SEED is the fallback.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("VIBRONIC_SEED"))
    return std::stoull(env);
  return 0;
}

// "photons.ptg" or "photons.ptg:2" -> (path, optional channel)
std::pair<std::string, std::optional<std::uint8_t>> parse_stream_ref(
    const std::string& ref) {
  const auto colon = ref.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon == 1)
    return {ref, std::nullopt};  // bare path (tolerate Windows drive colons)
  const std::string tail = ref.substr(colon + 1);
  if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos)
    return {ref, std::nullopt};
  const unsigned long chan = std::stoul(tail);
  if (chan > 255) throw std::invalid_argument("channel out of range in " + ref);
  return {ref.substr(0, colon), static_cast<std::uint8_t>(chan)};
}

std::string sidecar_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension();
  return p.string() + "_params.json";
}

int run_lineshape(const std::string& dos_path, double s, double temp_k,
                  double zpl_ev, double gamma_mev,
                  const std::string& reweight_path,
                  const std::string& prefactor, const std::string& out_path) {
  vibronic::PhononDOS dos = vibronic::load_dos_csv(dos_path);
  if (!reweight_path.empty())
    dos = vibronic::reweight_dos(dos, vibronic::load_reweight_json(reweight_path));

  vibronic::LineshapeParams params;
  params.huang_rhys = s;
  params.temperature_k = temp_k;
  params.zpl_energy_ev = zpl_ev;
  params.zpl_fwhm_mev = gamma_mev;
  params.prefactor_mode = vibronic::prefactor_mode_from_string(prefactor);

  const vibronic::Spectrum spectrum = vibronic::synthesize_spectrum(params, dos);
  vibronic::save_spectrum_csv(spectrum, out_path);
  vibronic::save_spectrum_sidecar_json(spectrum, sidecar_path(out_path));
  return 0;
}

int run_simulate(const std::string& config_path, const std::string& out_path,
                 const std::string& phonons_path,
                 const std::optional<std::uint64_t>& seed_flag) {
  vibronic::SceneConfig scene = vibronic::load_scene_json(config_path);
  if (seed_flag || std::getenv("VIBRONIC_SEED"))
    scene.seed = resolve_seed(seed_flag);

  const vibronic::SimulationResult result = vibronic::simulate(scene);
  vibronic::write_timetag_file(result.photons, out_path);
  if (!phonons_path.empty())
    vibronic::write_timetag_file(result.phonons, phonons_path);

  vibronic::RunManifest manifest;
  manifest.command = "simulate";
  {
    std::ifstream in(config_path);
    in >> manifest.config;
  }
  manifest.seed = scene.seed;
  manifest.inputs.push_back(config_path);
  manifest.outputs.push_back(out_path);
  if (!phonons_path.empty()) manifest.outputs.push_back(phonons_path);
  manifest.write(out_path + ".manifest.json");
  return 0;
}

int run_correlate(const std::string& a_ref, const std::string& b_ref,
                  const std::string& bin_text, const std::string& window_text,
                  const std::string& out_path) {
  const auto [a_path, a_chan] = parse_stream_ref(a_ref);
  const auto [b_path, b_chan] = parse_stream_ref(b_ref);
  vibronic::TimeTagStream a = vibronic::read_timetag_file(a_path);
  vibronic::TimeTagStream b =
      b_path == a_path ? a : vibronic::read_timetag_file(b_path);
  if (a_chan) a = vibronic::split_by_channel(a, *a_chan);
  if (b_chan) b = vibronic::split_by_channel(b, *b_chan);
  const bool same_stream = a_path == b_path && a_chan == b_chan;

  vibronic::CorrelationHistogram hist = vibronic::correlate(
      a, b, vibronic::parse_duration_ps(bin_text),
      vibronic::parse_duration_ps(window_text), same_stream);
  hist.label = a_ref + " x " + b_ref;
  vibronic::save_histogram_json(hist, out_path);
  return 0;
}

int run_fit(const std::string& hist_path, std::size_t chains,
            std::size_t samples, const std::optional<std::uint64_t>& seed_flag,
            const std::string& out_path) {
  const vibronic::CorrelationHistogram hist =
      vibronic::load_histogram_json(hist_path);
  vibronic::SamplerSettings sampler;
  sampler.chains = chains;
  sampler.samples_per_chain = samples;
  sampler.seed = resolve_seed(seed_flag);
  const vibronic::PosteriorSummary summary =
      vibronic::fit_g2(hist, vibronic::G2Priors{}, sampler);
  vibronic::save_posterior_json(summary, out_path);
  if (!summary.converged) {
    std::cerr << "fit did not converge (split-Rhat > 1.05); posterior written "
                 "for inspection\n";
    return kExitUnconverged;
  }
  return 0;
}

int run_cs_check(const std::string& ll_path, const std::string& mm_path,
                 const std::string& lm_path, const std::string& out_path,
                 double p_violation, double p_classical) {
  vibronic::CSThresholds thresholds;
  thresholds.violation_probability = p_violation;
  thresholds.classical_probability = p_classical;
  const vibronic::CSVerdict verdict = vibronic::cs_check(
      vibronic::load_posterior_json(ll_path),
      vibronic::load_posterior_json(mm_path),
      vibronic::load_posterior_json(lm_path), thresholds);
  if (!out_path.empty()) vibronic::save_verdict_json(verdict, out_path);
  std::cout << vibronic::to_string(verdict.classification)
            << " P(R>1)=" << verdict.probability_violation
            << " median(R)=" << verdict.ratio_median << "\n";
  switch (verdict.classification) {
    case vibronic::CSClass::kClassical: return 0;
    case vibronic::CSClass::kViolation: return kExitViolation;
    case vibronic::CSClass::kInconclusive: return kExitInconclusive;
  }
  return kExitInconclusive;
}

int run_full_pipeline(const std::string& config_path,
                      const std::string& out_dir,
                      const std::optional<std::uint64_t>& seed_flag,
                      int threads) {
  vibronic::PipelineOptions options;
  options.config_path = config_path;
  options.out_dir = out_dir;
  if (seed_flag) options.seed_override = *seed_flag;
  else if (const char* env = std::getenv("VIBRONIC_SEED"))
    options.seed_override = std::stoull(env);
  options.threads = threads;

  const vibronic::PipelineResult result = vibronic::run_pipeline(options);
  for (const auto& [pair, verdict] : result.verdicts) {
    std::cout << "(" << result.band_labels[pair.first] << ","
              << result.band_labels[pair.second]
              << "): " << vibronic::to_string(verdict.classification)
              << "  P(R>1)=" << verdict.probability_violation << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vibronic: phonon-sideband spectra, photon-stream simulation "
               "and correlation analysis"};
  app.require_subcommand(1);

  // lineshape
  std::string ls_dos, ls_reweight, ls_prefactor = "none", ls_out;
  double ls_s = 0.0, ls_temp = 0.0, ls_zpl = 2.21, ls_gamma = 1.3;
  auto* ls = app.add_subcommand("lineshape",
                                "Synthesize an emission spectrum from a "
                                "phonon DOS");
  ls->add_option("--dos", ls_dos, "one-phonon DOS CSV")->required();
  ls->add_option("--s", ls_s, "Huang-Rhys factor")->required();
  ls->add_option("--temp", ls_temp, "temperature, K")->required();
  ls->add_option("--zpl", ls_zpl, "zero-phonon line energy, eV");
  ls->add_option("--gamma", ls_gamma, "ZPL Lorentzian FWHM, meV");
  ls->add_option("--reweight", ls_reweight, "Lorentzian reweighting JSON");
  ls->add_option("--prefactor", ls_prefactor,
                 "cross_section | rate_cubed | none");
  ls->add_option("--out", ls_out, "output spectrum CSV")->required();

  // simulate
  std::string sim_config, sim_out, sim_phonons;
  std::optional<std::uint64_t> sim_seed;
  auto* sim = app.add_subcommand("simulate",
                                 "Generate photon time-tag streams for a "
                                 "scene");
  sim->add_option("--config", sim_config, "scene JSON")->required();
  sim->add_option("--out", sim_out, "photon time-tag output (PTG1)")->required();
  sim->add_option("--phonons", sim_phonons, "optional phonon time-tag output");
  sim->add_option("--seed", sim_seed, "RNG seed (overrides scene and env)");

  // correlate
  std::string co_a, co_b, co_bin, co_window, co_out;
  auto* co = app.add_subcommand("correlate",
                                "Estimate g2(tau) between two streams");
  co->add_option("--a", co_a, "stream A: <file>[:chan]")->required();
  co->add_option("--b", co_b, "stream B: <file>[:chan]")->required();
  co->add_option("--bin", co_bin, "bin width (ps/ns/us/ms/s)")->required();
  co->add_option("--window", co_window, "max |tau| (ps/ns/us/ms/s)")->required();
  co->add_option("--out", co_out, "histogram JSON output")->required();

  // fit
  std::string fit_hist, fit_out;
  std::size_t fit_chains = 4, fit_samples = 5000;
  std::optional<std::uint64_t> fit_seed;
  auto* fit = app.add_subcommand("fit",
                                 "Bayesian two-level-model fit of a g2 "
                                 "histogram");
  fit->add_option("--hist", fit_hist, "histogram JSON")->required();
  fit->add_option("--chains", fit_chains, "number of MCMC chains");
  fit->add_option("--samples", fit_samples, "post-burn-in samples per chain");
  fit->add_option("--seed", fit_seed, "RNG seed");
  fit->add_option("--out", fit_out, "posterior JSON output")->required();

  // cs-check
  std::string cs_ll, cs_mm, cs_lm, cs_out;
  double cs_pv = 0.95, cs_pc = 0.05;
  auto* cs = app.add_subcommand("cs-check",
                                "Cauchy-Schwarz test on three g2(0) "
                                "posteriors");
  cs->add_option("--ll", cs_ll, "autocorrelation posterior, band l")->required();
  cs->add_option("--mm", cs_mm, "autocorrelation posterior, band m")->required();
  cs->add_option("--lm", cs_lm, "cross-correlation posterior")->required();
  cs->add_option("--out", cs_out, "verdict JSON output");
  cs->add_option("--p-violation", cs_pv, "P(R>1) threshold for violation");
  cs->add_option("--p-classical", cs_pc, "P(R>1) threshold for classical");

  // pipeline
  std::string pl_config, pl_out_dir;
  std::optional<std::uint64_t> pl_seed;
  int pl_threads = 1;
  auto* pl = app.add_subcommand("pipeline",
                                "Full run: lineshape, simulate, correlate, "
                                "fit and cs-check every band pair");
  pl->add_option("--config", pl_config, "pipeline JSON config")->required();
  pl->add_option("--out-dir", pl_out_dir, "output directory")->required();
  pl->add_option("--seed", pl_seed, "RNG seed override");
  pl->add_option("--threads", pl_threads, "worker threads for pair fan-out "
                                          "(0 = auto)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ls->parsed())
      return run_lineshape(ls_dos, ls_s, ls_temp, ls_zpl, ls_gamma,
                           ls_reweight, ls_prefactor, ls_out);
    if (sim->parsed())
      return run_simulate(sim_config, sim_out, sim_phonons, sim_seed);
    if (co->parsed())
      return run_correlate(co_a, co_b, co_bin, co_window, co_out);
    if (fit->parsed())
      return run_fit(fit_hist, fit_chains, fit_samples, fit_seed, fit_out);
    if (cs->parsed())
      return run_cs_check(cs_ll, cs_mm, cs_lm, cs_out, cs_pv, cs_pc);
    if (pl->parsed())
      return run_full_pipeline(pl_config, pl_out_dir, pl_seed, pl_threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
