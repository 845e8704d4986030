#include "vibronic/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "vibronic/rng.hpp"

namespace vibronic {

namespace {

constexpr double kPsPerS = 1e12;

std::int64_t to_ps(double t_s) {
  return static_cast<std::int64_t>(std::floor(t_s * kPsPerS + 0.5));
}

// stream-id bases for deriving independent RNG streams from the scene seed
constexpr std::uint64_t kEmitterStreamBase = 1000;
constexpr std::uint64_t kBackgroundStreamBase = 2000;
constexpr std::uint64_t kCascadeStreamBase = 3000;

}  // namespace

void EmitterConfig::validate(std::size_t band_count) const {
  if (!(excitation_rate_hz > 0.0) || !std::isfinite(excitation_rate_hz))
    throw std::invalid_argument("excitation_rate must be finite and > 0");
  if (!(excited_lifetime_s > 0.0) || !std::isfinite(excited_lifetime_s))
    throw std::invalid_argument("excited_lifetime must be finite and > 0");
  if (branching.size() != band_count)
    throw std::invalid_argument("branching length must equal band_count");
  double sum = 0.0;
  for (double p : branching) {
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("branching entries must be in [0, 1]");
    sum += p;
  }
  if (sum > 1.0 + 1e-12)
    throw std::invalid_argument("branching probabilities sum above 1");
  if (phonon_tags.size() != band_count)
    throw std::invalid_argument("phonon_tags length must equal band_count");
  for (int n : phonon_tags) {
    if (n < 0 || n > 2)
      throw std::invalid_argument("phonon_tags entries must be 0, 1 or 2");
  }
}

void SceneConfig::validate() const {
  if (band_count == 0 || band_count > 250)
    throw std::invalid_argument("band_count must be in [1, 250]");
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s))
    throw std::invalid_argument("duration must be >= 0");
  if (emitters.empty()) throw std::invalid_argument("scene needs at least one emitter");
  for (const auto& e : emitters) e.validate(band_count);
  if (emitters.size() > 200)
    throw std::invalid_argument("too many emitters for origin tagging");
  if (background_rates_hz.size() != band_count)
    throw std::invalid_argument("background_rates length must equal band_count");
  for (double r : background_rates_hz) {
    if (r < 0.0 || !std::isfinite(r))
      throw std::invalid_argument("background rates must be finite and >= 0");
  }
  for (const auto& c : cascades) {
    if (c.band >= band_count) throw std::invalid_argument("cascade band out of range");
    if (c.rate_hz < 0.0 || !std::isfinite(c.rate_hz))
      throw std::invalid_argument("cascade rate must be finite and >= 0");
    if (!(c.delay_s > 0.0)) throw std::invalid_argument("cascade delay must be > 0");
  }
  if (detection_efficiency.size() != band_count)
    throw std::invalid_argument("detection_efficiency length must equal band_count");
  for (double eta : detection_efficiency) {
    if (eta < 0.0 || eta > 1.0)
      throw std::invalid_argument("detection_efficiency must be in [0, 1]");
  }
  if (!misassignment.empty()) {
    if (misassignment.size() != band_count)
      throw std::invalid_argument("misassignment matrix must be band_count x band_count");
    for (const auto& row : misassignment) {
      if (row.size() != band_count)
        throw std::invalid_argument("misassignment matrix must be square");
      double sum = 0.0;
      for (double p : row) {
        if (p < 0.0) throw std::invalid_argument("misassignment entries must be >= 0");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("misassignment rows must sum to 1");
    }
  }
  if (jitter_sigma_s < 0.0) throw std::invalid_argument("jitter_sigma must be >= 0");
}

SimulationResult simulate(const SceneConfig& scene) {
  scene.validate();

  const double duration = scene.duration_s;
  const std::int64_t duration_ps = to_ps(duration);
  const bool jitter = scene.jitter_sigma_s > 0.0;

  SimulationResult result;
  result.photons.channel_count = static_cast<std::uint8_t>(scene.band_count);
  result.phonons.channel_count = static_cast<std::uint8_t>(scene.band_count);
  auto& photons = result.photons.events;
  auto& phonons = result.phonons.events;

  auto assign_band = [&](std::size_t band, Rng& rng) -> std::size_t {
    if (scene.misassignment.empty()) return band;
    const auto& row = scene.misassignment[band];
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t b = 0; b < row.size(); ++b) {
      cum += row[b];
      if (u < cum) return b;
    }
    return row.size() - 1;
  };

  auto record_photon = [&](double t_s, std::size_t band, std::uint8_t origin,
                           std::uint8_t phonon_count, Rng& rng) {
    double t = t_s;
    if (jitter) t += rng.normal(0.0, scene.jitter_sigma_s);
    const std::int64_t ts = to_ps(t);
    if (ts < 0 || ts > duration_ps) return;
    photons.push_back(PhotonEvent{ts, static_cast<std::uint8_t>(band), origin,
                                  phonon_count});
  };

  for (std::size_t i = 0; i < scene.emitters.size(); ++i) {
    const EmitterConfig& em = scene.emitters[i];
    Rng rng(derive_seed(scene.seed, kEmitterStreamBase + i));
    const double mean_wait = 1.0 / em.excitation_rate_hz;
    double t = 0.0;
    while (true) {
      t += rng.exponential(mean_wait);         // ground-state wait
      t += rng.exponential(em.excited_lifetime_s);  // excited-state dwell
      if (t > duration) break;

      const double u = rng.uniform();
      double cum = 0.0;
      std::size_t band = scene.band_count;  // sentinel: nonradiative
      for (std::size_t b = 0; b < scene.band_count; ++b) {
        cum += em.branching[b];
        if (u < cum) {
          band = b;
          break;
        }
      }
      if (band == scene.band_count) continue;  // nonradiative decay

      // Phonons accompany the emission itself, at the pre-jitter timestamp.
      const int n_phonons = em.phonon_tags[band];
      const std::int64_t base_ts = to_ps(t);
      for (int k = 0; k < n_phonons; ++k)
        phonons.push_back(PhotonEvent{base_ts, static_cast<std::uint8_t>(band),
                                      static_cast<std::uint8_t>(i), 1});

      const std::size_t detected_band = assign_band(band, rng);
      if (rng.uniform() >= scene.detection_efficiency[detected_band]) continue;
      record_photon(t, detected_band, static_cast<std::uint8_t>(i),
                    static_cast<std::uint8_t>(n_phonons), rng);
    }
  }

  for (std::size_t b = 0; b < scene.band_count; ++b) {
    const double rate = scene.background_rates_hz[b];
    if (rate <= 0.0) continue;
    Rng rng(derive_seed(scene.seed, kBackgroundStreamBase + b));
    double t = 0.0;
    while (true) {
      t += rng.exponential(1.0 / rate);
      if (t > duration) break;
      photons.push_back(PhotonEvent{to_ps(t), static_cast<std::uint8_t>(b),
                                    kOriginBackground, 0});
    }
  }

  for (std::size_t c = 0; c < scene.cascades.size(); ++c) {
    const CascadeBackground& cas = scene.cascades[c];
    if (cas.rate_hz <= 0.0) continue;
    Rng rng(derive_seed(scene.seed, kCascadeStreamBase + c));
    double t = 0.0;
    while (true) {
      t += rng.exponential(1.0 / cas.rate_hz);
      if (t > duration) break;
      record_photon(t, cas.band, kOriginCascade, 0, rng);
      const double t2 = t + rng.exponential(cas.delay_s);
      if (t2 <= duration) record_photon(t2, cas.band, kOriginCascade, 0, rng);
    }
  }

  std::sort(photons.begin(), photons.end(), event_before);
  std::sort(phonons.begin(), phonons.end(), event_before);
  return result;
}

namespace {

double duration_field(const nlohmann::json& j, const std::string& key_s,
                      const std::string& key_ns, double fallback_s) {
  if (j.contains(key_s)) return j.at(key_s).get<double>();
  if (j.contains(key_ns)) return j.at(key_ns).get<double>() * 1e-9;
  return fallback_s;
}

}  // namespace

SceneConfig parse_scene_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SceneConfig scene;
  scene.band_count = j.at("band_count").get<std::size_t>();
  scene.duration_s = j.at("duration_s").get<double>();
  scene.seed = j.value("seed", std::uint64_t{0});
  for (const auto& je : j.at("emitters")) {
    EmitterConfig em;
    em.excitation_rate_hz = je.at("excitation_rate_hz").get<double>();
    em.excited_lifetime_s =
        duration_field(je, "excited_lifetime_s", "excited_lifetime_ns", 4e-9);
    em.branching = je.at("branching").get<std::vector<double>>();
    em.phonon_tags = je.at("phonon_tags").get<std::vector<int>>();
    scene.emitters.push_back(std::move(em));
  }
  scene.background_rates_hz = j.value(
      "background_rates_hz", std::vector<double>(scene.band_count, 0.0));
  if (j.contains("cascade_backgrounds")) {
    for (const auto& jc : j.at("cascade_backgrounds")) {
      CascadeBackground cas;
      cas.band = jc.at("band").get<std::uint8_t>();
      cas.rate_hz = jc.at("rate_hz").get<double>();
      cas.delay_s = duration_field(jc, "delay_s", "delay_ns", 4e-9);
      scene.cascades.push_back(cas);
    }
  }
  scene.detection_efficiency = j.value(
      "detection_efficiency", std::vector<double>(scene.band_count, 1.0));
  if (j.contains("misassignment"))
    scene.misassignment =
        j.at("misassignment").get<std::vector<std::vector<double>>>();
  if (j.contains("jitter_sigma_ps"))
    scene.jitter_sigma_s = j.at("jitter_sigma_ps").get<double>() * 1e-12;
  scene.validate();
  return scene;
}

SceneConfig load_scene_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_scene_json(text);
}

}  // namespace vibronic
