#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oamtomo/angles.hpp"
#include "oamtomo/apparatus.hpp"
#include "oamtomo/phasecam.hpp"
#include "oamtomo/qubit.hpp"

namespace oamtomo::tomo {

struct FringeSample {
  double alpha_d = 0.0;  // dark-axis angle read by the phase camera, rad
  double value = 0.0;    // mean clicks per measurement
};

/// Sinusoidal fringe A·(1 + V·cos(φ + θ)) with φ = 2α_d + π, i.e.
/// A·(1 − V·cos(2α_d + θ)). θ equals the relative phase of an equal-weight
/// input, so H, D, V, A give 0, π/2, π, 3π/2.
struct FringeFit {
  double offset = 0.0;      // A
  double visibility = 0.0;  // V in [0, 1]
  double theta = 0.0;       // [0, 2π)
  double residual = 0.0;    // RMS of the fit residuals
};

/// Linear least squares in (1, cos 2α_d, sin 2α_d). Needs at least 8
/// samples whose 2α_d values leave no gap larger than π. A fit that would
/// need V < 0 comes out as |V| with θ shifted by π; V above 1 is clipped.
FringeFit fit_fringe(std::span<const FringeSample> samples);

/// Phase-camera readout of the interferometer phase.
enum class ReadoutMode {
  Analytic,  // bin of the ideal dark axis
  Camera,    // rendered frame analysed by the dark-axis routine
};

struct ReadoutOptions {
  ReadoutMode mode = ReadoutMode::Analytic;
  int bins = 120;
  phasecam::FrameGeometry geometry{};
  phasecam::Defects defects{};
  phasecam::Noise noise{};
};

/// Maps a reference-beam phase to the folded dark-axis bin that the
/// analysis would report.
class PhaseReadout {
 public:
  explicit PhaseReadout(const ReadoutOptions& opts = {});

  int bin(double phi_ref, std::uint64_t seed = 0) const;
  const PhaseBins& bins() const { return bins_; }
  ReadoutMode mode() const { return mode_; }

 private:
  PhaseBins bins_;
  ReadoutMode mode_;
  std::shared_ptr<const phasecam::FrameSynthesizer> synth_;
  std::shared_ptr<const phasecam::PhaseAnalyzer> analyzer_;
};

struct CalibrationOptions {
  int steps = 720;                  // readouts per probe scan
  std::uint64_t trials_per_step = 20'000;
  double frame_period = 0.125;      // s between readouts, drives the drift
  double calibration_offset = 0.0;  // Δθ between reference and signal phase, rad
  double visibility_threshold = 0.8;
  ReadoutOptions readout{};
};

struct ProbeCalibration {
  char mode = 'H';
  FringeFit fit;
  double theta_theory = 0.0;
  double deviation = 0.0;  // wrap(θ − θ_theory) in (−π, π]
  bool misaligned = false;
};

struct CalibrationReport {
  std::vector<ProbeCalibration> probes;  // H, D, V, A
  double mean_abs_deviation = 0.0;
  double deviation_std = 0.0;    // population spread of |deviation|
  double cross_rotation = 0.0;   // rotation of the best-fit orthogonal cross
  double cross_residual = 0.0;   // mean |deviation − rotation|
  double mean_visibility = 0.0;
  bool misaligned = false;
};

/// Scans φ over a full turn for each probe H, D, V, A on port X, bins the
/// clicks with the phase readout and fits the fringes.
CalibrationReport calibrate(const apparatus::InterferometerConfig& device,
                            const apparatus::DetectionConfig& det, std::uint64_t seed,
                            const CalibrationOptions& opts = {});

/// Summary of per-mode fitted θ values against the theoretical 0, π/2, π,
/// 3π/2; used to score a set of published θ values as well.
CalibrationReport calibration_report(std::span<const ProbeCalibration> probes,
                                     double visibility_threshold = 0.8);

enum class EntryKind { BlockL, BlockR, Fixed, Scan };

struct ScheduleEntry {
  EntryKind kind = EntryKind::Fixed;
  double phase = 0.0;  // target φ of a Fixed entry, rad
  std::uint64_t trials = 1'000'000;  // per entry; per step for Scan
  int steps = 0;                     // Scan only
  std::string id;

  static ScheduleEntry block_l(std::uint64_t trials, std::string id = "block-L");
  static ScheduleEntry block_r(std::uint64_t trials, std::string id = "block-R");
  static ScheduleEntry fixed(double phase, std::uint64_t trials, std::string id = {});
  static ScheduleEntry scan(int steps, std::uint64_t trials_per_step, std::string id = "scan");
};

/// Ordered measurement configurations. A valid schedule realizes all six
/// projectors: both blocked configurations plus either a scan or fixed
/// entries at φ = 0, π/2, π, 3π/2.
struct MeasurementSchedule {
  std::vector<ScheduleEntry> entries;

  /// Two blocked and four fixed-phase entries with `trials` each.
  static MeasurementSchedule standard(std::uint64_t trials = 1'000'000);
  void validate(int bins = 120) const;
};

struct TomographyOptions {
  ReadoutOptions readout{};
  double calibration_offset = 0.0;  // Δθ left after calibration, rad
  double frame_period = 0.125;      // s between readouts of a scan
  bool background_subtraction = false;
  bool physical_projection = false;
};

struct ProjectionProbabilities {
  double p0 = 0.0;  // R
  double p1 = 0.0;  // L
  double pH = 0.0;
  double pV = 0.0;
  double pD = 0.0;
  double pA = 0.0;
};

struct TomographyResult {
  std::vector<apparatus::CountRecord> counts;
  ProjectionProbabilities probabilities;
  qubit::StokesVector stokes;
  qubit::DensityMatrix rho;
  double fidelity = 0.0;
  double fidelity_sigma = 0.0;  // binomial errors propagated through the Stokes vector
};

/// Runs the schedule on `input`. Phase configurations use port X only;
/// blocked configurations split their trials over X and Y and pool them.
/// Fixed entries are phase locked: the reference phase is spread uniformly
/// over the target readout bin. Throws DataError if a complementary pair
/// has no clicks at all.
TomographyResult run_tomography(const qubit::PureQubit& input, const MeasurementSchedule& schedule,
                                const apparatus::InterferometerConfig& device,
                                const apparatus::DetectionConfig& det, std::uint64_t seed,
                                const TomographyOptions& opts = {});

/// Imperfections limiting the reachable fidelity.
struct ErrorBudget {
  double visibility = 1.0;
  double leakage = 0.0;             // ε, power ratio
  double calibration_offset = 0.0;  // Δθ, rad
  double coupling_imbalance = 0.0;  // Δη = |η_R − η_L| / (η_R + η_L)

  void validate() const;
  /// Budget implied by a device and a residual calibration offset.
  static ErrorBudget of(const apparatus::InterferometerConfig& device,
                        double calibration_offset = 0.0);
};

struct FidelityBounds {
  double equatorial = 1.0;       // ½(1 + V − Δη²/2) − Δθ²
  double poles = 1.0;            // 1 − ε
  double visibility_loss = 0.0;  // Δη²/2
};

FidelityBounds fidelity_bounds(const ErrorBudget& budget);

/// Bound for a given input: the pole bound for R and L, the equatorial
/// bound otherwise.
double fidelity_bound_for(const qubit::PureQubit& input, const FidelityBounds& bounds);

struct EfficiencyStage {
  std::string name;
  double value = 1.0;
};

/// Product of the stage transmissions; each must lie in [0, 1].
double efficiency_budget(std::span<const EfficiencyStage> stages);
double efficiency_budget(std::span<const double> stages);

/// Loss contributions of the two-path device, detectors excluded.
std::vector<EfficiencyStage> device_efficiency_stages();

}  // namespace oamtomo::tomo
