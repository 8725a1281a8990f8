#include "oamtomo/apparatus.hpp"

#include <algorithm>
#include <cmath>

#include "oamtomo/angles.hpp"
#include "oamtomo/error.hpp"
#include "oamtomo/seed.hpp"

namespace oamtomo::apparatus {

namespace {

void check_fraction(double v, const std::string& what) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument(what + " must lie in [0, 1]");
}

// Field amplitude after the projector of one arm, before the arm phase.
Complex arm_amplitude(const qubit::PureQubit& in, const ProjectorPath& path) {
  return in.alpha() * path.amplitude_for(+1) + in.beta() * path.amplitude_for(-1);
}

struct Arms {
  Complex r;
  Complex l;
};

Arms arms(const qubit::PureQubit& input, const InterferometerConfig& cfg, double phi) {
  const double split = std::sqrt(cfg.input_split);
  Arms a{split * arm_amplitude(input, cfg.r),
         split * arm_amplitude(input, cfg.l) * std::polar(1.0, phi)};
  if (cfg.blocked == Blocked::R) a.r = 0.0;
  if (cfg.blocked == Blocked::L) a.l = 0.0;
  return a;
}

PortIntensities intensities_at(const qubit::PureQubit& input, const InterferometerConfig& cfg,
                               double phi) {
  const Arms a = arms(input, cfg, phi);
  const double incoherent = std::norm(a.r) + std::norm(a.l);
  const double cross = 2.0 * cfg.coherence * (std::conj(a.r) * a.l).real();
  const double tap = 1.0 - cfg.reference_tap_loss;
  return {0.5 * tap * (incoherent + cross), 0.5 * tap * (incoherent - cross)};
}

double click_from_intensity(double intensity, const DetectionConfig& det) {
  const double mu_eff = det.mean_photons * det.detector_efficiency * intensity;
  return 1.0 - std::exp(-mu_eff) * (1.0 - det.background);
}

}  // namespace

const char* to_string(Port p) { return p == Port::X ? "X" : "Y"; }

const char* to_string(Blocked b) {
  switch (b) {
    case Blocked::R: return "R";
    case Blocked::L: return "L";
    default: return "none";
  }
}

double ProjectorPath::amplitude_for(int l) const {
  if (l == target_l) return std::sqrt(efficiency);
  const auto it = leakage.find(l);
  return it == leakage.end() ? 0.0 : std::sqrt(efficiency * it->second);
}

void ProjectorPath::validate() const {
  check_fraction(efficiency, "projector efficiency");
  for (const auto& [mode, eps] : leakage) {
    if (mode == target_l) throw InvalidArgument("leakage listed for the projector's own mode");
    check_fraction(eps, "leakage for l=" + std::to_string(mode));
  }
}

InterferometerConfig InterferometerConfig::ideal() { return {}; }

InterferometerConfig InterferometerConfig::nominal() {
  const double eps = db_to_ratio(25.0);
  InterferometerConfig c;
  c.r = {+1, 0.65, {{-1, eps}}};
  c.l = {-1, 0.65, {{+1, eps}}};
  c.reference_tap_loss = 0.25;
  c.coherence = 0.99;
  c.phase_drift = deg_to_rad(2.0);
  return c;
}

InterferometerConfig InterferometerConfig::calibration() {
  InterferometerConfig c = nominal();
  c.r.leakage.clear();
  c.l.leakage.clear();
  c.coherence = 0.93;
  return c;
}

InterferometerConfig InterferometerConfig::measured() {
  InterferometerConfig c = nominal();
  const double er = 0.823;
  const double el = 0.778;
  c.r = {+1, er, {{-2, 0.001 / er}, {-1, 0.005 / er}, {0, 0.001 / er}, {+2, 0.057 / er}}};
  c.l = {-1, el, {{-2, 0.028 / el}, {0, 0.017 / el}, {+1, 0.0003 / el}, {+2, 0.0004 / el}}};
  return c;
}

InterferometerConfig InterferometerConfig::preset(std::string_view name) {
  if (name == "ideal") return ideal();
  if (name == "nominal") return nominal();
  if (name == "calibration") return calibration();
  if (name == "measured") return measured();
  throw InvalidArgument("unknown device preset '" + std::string(name) + "'");
}

InterferometerConfig InterferometerConfig::with_phase(double phi) const {
  InterferometerConfig c = *this;
  c.phase = wrap_phase(phi);
  return c;
}

InterferometerConfig InterferometerConfig::with_blocked(Blocked b) const {
  InterferometerConfig c = *this;
  c.blocked = b;
  return c;
}

void InterferometerConfig::validate() const {
  r.validate();
  l.validate();
  if (!(phase >= 0.0 && phase < kTwoPi)) throw InvalidArgument("phase must lie in [0, 2pi)");
  if (!(phase_drift >= 0.0)) throw InvalidArgument("phase drift rate must be non-negative");
  check_fraction(input_split, "input split");
  check_fraction(reference_tap_loss, "reference tap loss");
  check_fraction(coherence, "coherence");
}

void DetectionConfig::validate() const {
  if (!(mean_photons >= 0.0)) throw InvalidArgument("mean photon number must be non-negative");
  check_fraction(detector_efficiency, "detector efficiency");
  check_fraction(background, "background probability");
  if (trials < 1) throw InvalidArgument("trials must be at least 1");
  if (!(trial_period > 0.0)) throw InvalidArgument("trial period must be positive");
}

PortAmplitudes output_amplitudes(const qubit::PureQubit& input, const InterferometerConfig& cfg) {
  const Arms a = arms(input, cfg, cfg.phase);
  const double s = std::sqrt(0.5 * (1.0 - cfg.reference_tap_loss));
  return {s * (a.r + a.l), s * (a.r - a.l)};
}

PortIntensities port_intensities(const qubit::PureQubit& input, const InterferometerConfig& cfg) {
  return intensities_at(input, cfg, cfg.phase);
}

double click_probability(const qubit::PureQubit& input, const InterferometerConfig& cfg,
                         const DetectionConfig& det, Port port) {
  const PortIntensities in = port_intensities(input, cfg);
  return click_from_intensity(port == Port::X ? in.x : in.y, det);
}

double fringe_visibility(const qubit::PureQubit& input, const InterferometerConfig& cfg,
                         const DetectionConfig& det, Port port, int samples) {
  double lo = 1.0;
  double hi = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double p = click_probability(input, cfg.with_phase(kTwoPi * k / samples), det, port);
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  return hi + lo > 0.0 ? (hi - lo) / (hi + lo) : 0.0;
}

CountRecord simulate_counts(const qubit::PureQubit& input, const InterferometerConfig& cfg,
                            const DetectionConfig& det, Port port, std::uint64_t seed,
                            std::string configuration_id, int bins) {
  det.validate();
  CountRecord rec;
  rec.configuration_id = std::move(configuration_id);
  rec.port = port;
  rec.phase_bin = cfg.blocked == Blocked::None ? PhaseBins(bins).phase_bin(cfg.phase) : -1;
  rec.trials = det.trials;
  rec.seed = seed;

  Rng rng(seed);
  if (cfg.phase_drift == 0.0) {
    const double p = click_probability(input, cfg, det, port);
    for (std::uint64_t t = 0; t < det.trials; ++t) rec.clicks += rng.bernoulli(p);
    return rec;
  }
  const double step = cfg.phase_drift * std::sqrt(det.trial_period);
  double phi = cfg.phase;
  for (std::uint64_t t = 0; t < det.trials; ++t) {
    const PortIntensities in = intensities_at(input, cfg, phi);
    rec.clicks += rng.bernoulli(click_from_intensity(port == Port::X ? in.x : in.y, det));
    phi += step * rng.normal();
  }
  return rec;
}

double phase_sensitivity_geometric(double delta_length_cm, double delta_nu_ghz) {
  return 12.0 * delta_length_cm * delta_nu_ghz;
}

double phase_sensitivity_dispersion(double delta_fiber_cm, double delta_nu_ghz) {
  return -0.1 * delta_fiber_cm * delta_nu_ghz;
}

}  // namespace oamtomo::apparatus
