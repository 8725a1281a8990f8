#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "oamtomo/qubit.hpp"

namespace oamtomo::apparatus {

using Complex = std::complex<double>;

enum class Port { X, Y };
enum class Blocked { None, R, L };

const char* to_string(Port p);
const char* to_string(Blocked b);

/// Fork hologram plus single-mode fiber projecting onto |target_l⟩.
///
/// `efficiency` is the power transmission η of the targeted mode. Leakage
/// entries are power couplings of other input modes relative to η, so the
/// absolute transmission of mode m is η·ε_m. A leaked amplitude keeps the
/// input coefficient of its own mode and picks up the arm phase of the path
/// it leaks into.
struct ProjectorPath {
  int target_l = +1;
  double efficiency = 1.0;
  std::map<int, double> leakage;

  /// Amplitude transmission for input mode `l`.
  double amplitude_for(int l) const;
  void validate() const;
};

/// Two-path projection interferometer.
struct InterferometerConfig {
  ProjectorPath r{+1, 1.0, {}};
  ProjectorPath l{-1, 1.0, {}};
  double phase = 0.0;           // φ, rad in [0, 2π)
  double phase_drift = 0.0;     // rad/sqrt(s): std of φ after t seconds is drift·sqrt(t)
  Blocked blocked = Blocked::None;
  double input_split = 0.5;     // power fraction sent into each arm
  double reference_tap_loss = 0.0;
  double coherence = 1.0;       // mutual coherence of the recombined arms

  /// Lossless device of the textbook model.
  static InterferometerConfig ideal();
  /// Operating point of the weak-coherent-state runs: η = 0.65 per arm,
  /// −25 dB leakage, 25 % reference tap, coherence 0.99.
  static InterferometerConfig nominal();
  /// Fringe-calibration device: nominal losses, no leakage, coherence 0.93.
  static InterferometerConfig calibration();
  /// Measured per-mode couplings of both paths (R: 82.3 % on l=+1, L: 77.8 % on l=−1).
  static InterferometerConfig measured();
  /// Looks up ideal | nominal | calibration | measured.
  static InterferometerConfig preset(std::string_view name);

  InterferometerConfig with_phase(double phi) const;
  InterferometerConfig with_blocked(Blocked b) const;

  void validate() const;
};

struct DetectionConfig {
  double mean_photons = 0.6;         // μ per pulse
  double detector_efficiency = 0.5;  // assumed quantum efficiency
  double background = 1e-3;          // n̄_bg per measurement window
  std::uint64_t trials = 1'000'000;
  double trial_period = 1e-5;        // s between measurements (drift clock)

  void validate() const;
};

struct CountRecord {
  std::string configuration_id;
  Port port = Port::X;
  int phase_bin = -1;  // folded dark-axis bin; −1 when a path is blocked
  std::uint64_t trials = 0;
  std::uint64_t clicks = 0;
  std::uint64_t seed = 0;

  double rate() const { return trials ? static_cast<double>(clicks) / trials : 0.0; }
};

struct PortAmplitudes {
  Complex x;
  Complex y;
};

struct PortIntensities {
  double x = 0.0;
  double y = 0.0;
};

/// Coherent output amplitudes. The ideal device gives
/// ((α + βe^{iφ})/2, (α − βe^{iφ})/2). Ignores `coherence`.
PortAmplitudes output_amplitudes(const qubit::PureQubit& input, const InterferometerConfig& cfg);

/// Output power fractions including partial coherence and the reference tap.
PortIntensities port_intensities(const qubit::PureQubit& input, const InterferometerConfig& cfg);

/// μ_eff = μ·QE·I_port; P = 1 − e^{−μ_eff}·(1 − n̄_bg) (threshold detector,
/// background as an independent Bernoulli).
double click_probability(const qubit::PureQubit& input, const InterferometerConfig& cfg,
                         const DetectionConfig& det, Port port);

/// Fringe visibility (max−min)/(max+min) of click_probability as φ is
/// scanned over `samples` equally spaced phases.
double fringe_visibility(const qubit::PureQubit& input, const InterferometerConfig& cfg,
                         const DetectionConfig& det, Port port, int samples = 720);

/// Monte Carlo realization of det.trials pulses. Without drift the click count
/// is Binomial(trials, P); with drift each pulse sees its own φ.
CountRecord simulate_counts(const qubit::PureQubit& input, const InterferometerConfig& cfg,
                            const DetectionConfig& det, Port port, std::uint64_t seed,
                            std::string configuration_id = {}, int bins = 120);

/// dφ = 12°/(cm·GHz)·ΔL·Δν, degrees.
double phase_sensitivity_geometric(double delta_length_cm, double delta_nu_ghz);
/// dφ = −0.1°/(cm·GHz)·ΔL_fib·Δν, degrees.
double phase_sensitivity_dispersion(double delta_fiber_cm, double delta_nu_ghz);

}  // namespace oamtomo::apparatus
