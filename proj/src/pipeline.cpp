#include "vibronic/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <future>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "vibronic/lineshape.hpp"
#include "vibronic/manifest.hpp"
#include "vibronic/rng.hpp"
#include "vibronic/simulator.hpp"
#include "vibronic/timetag.hpp"

namespace vibronic {

namespace fs = std::filesystem;

namespace {

struct BandSpec {
  std::string label;
  double low_ev;
  double high_ev;
  int phonon_count;
};

[[noreturn]] void stage_error(const std::string& stage, const std::string& what) {
  throw std::runtime_error("pipeline stage '" + stage + "' failed: " + what);
}

std::string resolve_path(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_absolute()) return path.string();
  return (base / path).string();
}

}  // namespace

PipelineResult run_pipeline(const PipelineOptions& options) {
  std::ifstream in(options.config_path);
  if (!in)
    throw std::runtime_error("cannot open pipeline config: " + options.config_path);
  nlohmann::json cfg;
  in >> cfg;
  const fs::path config_dir = fs::path(options.config_path).parent_path();
  const fs::path out_dir(options.out_dir);
  fs::create_directories(out_dir);

  RunManifest manifest;
  manifest.command = "pipeline";
  manifest.config = cfg;

  std::uint64_t seed = cfg.value("seed", std::uint64_t{0});
  if (options.seed_override) seed = *options.seed_override;
  manifest.seed = seed;

  // ---- lineshape ----------------------------------------------------
  const auto& jls = cfg.at("lineshape");
  if (!jls.contains("huang_rhys"))
    stage_error("lineshape",
                "huang_rhys is required; refusing to pick a silent default");

  LineshapeParams params;
  params.huang_rhys = jls.at("huang_rhys").get<double>();
  params.temperature_k = jls.value("temperature_K", 300.0);
  params.zpl_energy_ev = jls.value("zpl_energy_eV", 2.21);
  params.zpl_fwhm_mev = jls.value("zpl_fwhm_meV", 1.3);
  params.acoustic_s = jls.value("acoustic_s", 0.0);
  params.acoustic_cutoff_mev = jls.value("acoustic_cutoff_meV", 5.0);
  params.dos_low_cutoff_mev = jls.value("dos_low_cutoff_meV", 5.0);
  params.prefactor_mode =
      prefactor_mode_from_string(jls.value("prefactor_mode", std::string("none")));
  params.redshift_min_mev = jls.value("redshift_min_meV", -300.0);
  params.redshift_max_mev = jls.value("redshift_max_meV", 1400.0);

  const std::string dos_path = resolve_path(config_dir, jls.at("dos_csv"));
  manifest.inputs.push_back(dos_path);

  Spectrum spectrum;
  try {
    PhononDOS dos = load_dos_csv(dos_path);
    if (jls.contains("reweight_json")) {
      const std::string rw_path =
          resolve_path(config_dir, jls.at("reweight_json"));
      manifest.inputs.push_back(rw_path);
      dos = reweight_dos(dos, load_reweight_json(rw_path));
    }
    spectrum = synthesize_spectrum(params, dos);
  } catch (const std::exception& e) {
    stage_error("lineshape", e.what());
  }

  const std::string spectrum_csv = (out_dir / "spectrum.csv").string();
  save_spectrum_csv(spectrum, spectrum_csv);
  save_spectrum_sidecar_json(spectrum, (out_dir / "spectrum_params.json").string());
  manifest.outputs.push_back(spectrum_csv);
  manifest.outputs.push_back((out_dir / "spectrum_params.json").string());

  // ---- band weights ---------------------------------------------------
  std::vector<BandSpec> bands;
  for (const auto& jb : cfg.at("bands")) {
    BandSpec b;
    b.label = jb.at("label").get<std::string>();
    b.low_ev = jb.at("low_eV").get<double>();
    b.high_ev = jb.at("high_eV").get<double>();
    b.phonon_count = jb.value("phonon_count", 0);
    bands.push_back(std::move(b));
  }
  if (bands.empty()) stage_error("band_weights", "no bands configured");

  std::vector<std::pair<double, double>> ranges;
  for (const auto& b : bands) ranges.emplace_back(b.low_ev, b.high_ev);
  std::vector<double> weights;
  try {
    weights = band_weights(spectrum, ranges);
  } catch (const std::exception& e) {
    stage_error("band_weights", e.what());
  }
  {
    nlohmann::json j;
    for (std::size_t i = 0; i < bands.size(); ++i)
      j[bands[i].label] = weights[i];
    const std::string path = (out_dir / "band_weights.json").string();
    std::ofstream out(path);
    out << j.dump(2) << "\n";
    manifest.outputs.push_back(path);
  }

  // ---- simulate -------------------------------------------------------
  const auto& jsc = cfg.at("scene");
  SceneConfig scene;
  scene.band_count = bands.size();
  scene.duration_s = jsc.at("duration_s").get<double>();
  scene.seed = seed;
  scene.jitter_sigma_s = jsc.value("jitter_sigma_ps", 0.0) * 1e-12;

  EmitterConfig bright;
  bright.excitation_rate_hz = jsc.at("excitation_rate_hz").get<double>();
  bright.excited_lifetime_s = jsc.value("excited_lifetime_ns", 4.0) * 1e-9;
  bright.branching = weights;  // the spectrum decides where photons go
  for (const auto& b : bands) bright.phonon_tags.push_back(b.phonon_count);
  scene.emitters.push_back(bright);

  if (jsc.contains("extra_emitters")) {
    for (const auto& je : jsc.at("extra_emitters")) {
      EmitterConfig em;
      em.excitation_rate_hz = je.at("excitation_rate_hz").get<double>();
      em.excited_lifetime_s = je.value("excited_lifetime_ns", 4.0) * 1e-9;
      em.branching = je.at("branching").get<std::vector<double>>();
      em.phonon_tags =
          je.value("phonon_tags", std::vector<int>(bands.size(), 0));
      scene.emitters.push_back(std::move(em));
    }
  }
  scene.background_rates_hz =
      jsc.value("background_rates_hz", std::vector<double>(bands.size(), 0.0));
  if (jsc.contains("cascade_backgrounds")) {
    for (const auto& jc : jsc.at("cascade_backgrounds")) {
      CascadeBackground cas;
      cas.band = jc.at("band").get<std::uint8_t>();
      cas.rate_hz = jc.at("rate_hz").get<double>();
      cas.delay_s = jc.value("delay_ns", 4.0) * 1e-9;
      scene.cascades.push_back(cas);
    }
  }
  scene.detection_efficiency = jsc.value(
      "detection_efficiency", std::vector<double>(bands.size(), 1.0));
  if (jsc.contains("misassignment"))
    scene.misassignment =
        jsc.at("misassignment").get<std::vector<std::vector<double>>>();

  SimulationResult sim;
  try {
    sim = simulate(scene);
  } catch (const std::exception& e) {
    stage_error("simulate", e.what());
  }
  const std::string photons_path = (out_dir / "photons.ptg").string();
  const std::string phonons_path = (out_dir / "phonons.ptg").string();
  write_timetag_file(sim.photons, photons_path);
  write_timetag_file(sim.phonons, phonons_path);
  manifest.outputs.push_back(photons_path);
  manifest.outputs.push_back(phonons_path);

  // ---- correlate + fit all pairs ---------------------------------------
  const auto& jco = cfg.at("correlate");
  const std::int64_t bin_ps = jco.at("bin_width_ps").get<std::int64_t>();
  const std::int64_t window_ps = jco.at("max_tau_ps").get<std::int64_t>();

  SamplerSettings sampler;
  if (cfg.contains("fit")) {
    const auto& jf = cfg.at("fit");
    sampler.chains = jf.value("chains", sampler.chains);
    sampler.burn_in = jf.value("burn_in", sampler.burn_in);
    sampler.samples_per_chain =
        jf.value("samples_per_chain", sampler.samples_per_chain);
  }
  G2Priors priors;

  std::vector<TimeTagStream> per_band;
  for (std::size_t b = 0; b < bands.size(); ++b)
    per_band.push_back(
        split_by_channel(sim.photons, static_cast<std::uint8_t>(b)));

  struct PairTask {
    std::size_t l, m, index;
  };
  std::vector<PairTask> tasks;
  for (std::size_t l = 0; l < bands.size(); ++l)
    for (std::size_t m = l; m < bands.size(); ++m)
      tasks.push_back({l, m, tasks.size()});

  PipelineResult result;
  result.band_labels.reserve(bands.size());
  for (const auto& b : bands) result.band_labels.push_back(b.label);
  result.band_weights = weights;

  std::map<std::pair<std::size_t, std::size_t>, PosteriorSummary> fits;

  auto run_pair = [&](const PairTask& task) {
    const auto& a = per_band[task.l];
    const auto& b = per_band[task.m];
    if (a.events.empty() || b.events.empty())
      stage_error("correlate", "band " + bands[task.l].label + " or " +
                                   bands[task.m].label + " has no events");
    CorrelationHistogram hist =
        correlate(a, b, bin_ps, window_ps, task.l == task.m);
    hist.label = bands[task.l].label + "," + bands[task.m].label;
    SamplerSettings pair_sampler = sampler;
    pair_sampler.seed = derive_seed(seed, 9000 + task.index);
    PosteriorSummary fit = fit_g2(hist, priors, pair_sampler);
    return std::make_pair(std::move(hist), std::move(fit));
  };

  unsigned n_threads = options.threads == 0
                           ? std::max(1u, std::thread::hardware_concurrency())
                           : static_cast<unsigned>(options.threads);
  std::vector<std::future<std::pair<CorrelationHistogram, PosteriorSummary>>>
      futures(tasks.size());
  if (n_threads > 1) {
    for (const auto& task : tasks)
      futures[task.index] =
          std::async(std::launch::async, [&, task] { return run_pair(task); });
  }

  for (const auto& task : tasks) {
    std::pair<CorrelationHistogram, PosteriorSummary> pair_result;
    try {
      pair_result =
          n_threads > 1 ? futures[task.index].get() : run_pair(task);
    } catch (const std::exception& e) {
      stage_error("correlate/fit [" + bands[task.l].label + "," +
                      bands[task.m].label + "]",
                  e.what());
    }
    const auto& [hist, fit] = pair_result;
    const std::string tag = bands[task.l].label + "_" + bands[task.m].label;
    const std::string hist_path = (out_dir / ("corr_" + tag + ".json")).string();
    const std::string fit_path = (out_dir / ("fit_" + tag + ".json")).string();
    save_histogram_json(hist, hist_path);
    if (!fit.converged)
      stage_error("fit [" + hist.label + "]",
                  "posterior flagged unconverged (split-Rhat > 1.05)");
    save_posterior_json(fit, fit_path);
    manifest.outputs.push_back(hist_path);
    manifest.outputs.push_back(fit_path);
    result.g2_zero_median[{task.l, task.m}] = sample_median(fit.g2_zero);
    fits[{task.l, task.m}] = fit;
  }

  // ---- Cauchy-Schwarz verdicts ----------------------------------------
  CSThresholds thresholds;
  if (cfg.contains("cs")) {
    thresholds.violation_probability =
        cfg["cs"].value("violation_probability", thresholds.violation_probability);
    thresholds.classical_probability =
        cfg["cs"].value("classical_probability", thresholds.classical_probability);
  }

  nlohmann::json verdict_matrix = nlohmann::json::array();
  for (std::size_t l = 0; l < bands.size(); ++l) {
    for (std::size_t m = l + 1; m < bands.size(); ++m) {
      CSVerdict verdict;
      try {
        verdict = cs_check(fits.at({l, l}), fits.at({m, m}), fits.at({l, m}),
                           thresholds);
      } catch (const std::exception& e) {
        stage_error("cs-check [" + bands[l].label + "," + bands[m].label + "]",
                    e.what());
      }
      const std::string tag = bands[l].label + "_" + bands[m].label;
      const std::string path = (out_dir / ("cs_" + tag + ".json")).string();
      save_verdict_json(verdict, path);
      manifest.outputs.push_back(path);
      result.verdicts[{l, m}] = verdict;
      verdict_matrix.push_back(
          {{"pair", {bands[l].label, bands[m].label}},
           {"classification", to_string(verdict.classification)},
           {"probability_violation", verdict.probability_violation},
           {"ratio_median", verdict.ratio_median}});
    }
  }
  {
    const std::string path = (out_dir / "verdicts.json").string();
    std::ofstream out(path);
    out << verdict_matrix.dump(2) << "\n";
    manifest.outputs.push_back(path);
  }

  manifest.write((out_dir / "manifest.json").string());
  return result;
}

}  // namespace vibronic
