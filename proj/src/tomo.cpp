#include "oamtomo/tomo.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "oamtomo/error.hpp"
#include "oamtomo/seed.hpp"

namespace oamtomo::tomo {

using apparatus::Blocked;
using apparatus::CountRecord;
using apparatus::Port;

namespace {

constexpr int kLockSamples = 64;

std::uint64_t bernoulli_clicks(double p, std::uint64_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::uint64_t clicks = 0;
  for (std::uint64_t t = 0; t < trials; ++t) clicks += rng.bernoulli(p);
  return clicks;
}

struct BinTally {
  std::uint64_t trials = 0;
  std::uint64_t clicks = 0;
};

// Full-turn scan of φ with drift between readouts; tallies port clicks per
// readout bin.
std::map<int, BinTally> scan_fringe(const qubit::PureQubit& input,
                                    const apparatus::InterferometerConfig& device,
                                    const apparatus::DetectionConfig& det, Port port,
                                    const PhaseReadout& readout, int steps,
                                    std::uint64_t trials_per_step, double frame_period,
                                    double offset, std::uint64_t seed) {
  if (steps < 1) throw InvalidArgument("a scan needs at least one step");
  apparatus::DetectionConfig step_det = det;
  step_det.trials = trials_per_step;
  apparatus::InterferometerConfig cfg = device;
  cfg.phase_drift = 0.0;
  cfg.blocked = Blocked::None;

  Rng drift(seed);
  const double kick = device.phase_drift * std::sqrt(frame_period);
  double walk = 0.0;
  std::map<int, BinTally> tally;
  for (int k = 0; k < steps; ++k) {
    const double phi_true = wrap_phase(kTwoPi * k / steps + walk);
    const int bin = readout.bin(phi_true - offset, child_seed(seed, 2 * k + 1));
    const auto rec = apparatus::simulate_counts(input, cfg.with_phase(phi_true), step_det, port,
                                                child_seed(seed, 2 * k));
    tally[bin].trials += rec.trials;
    tally[bin].clicks += rec.clicks;
    walk += kick * drift.normal();
  }
  return tally;
}

std::vector<FringeSample> to_samples(const std::map<int, BinTally>& tally, const PhaseBins& bins) {
  std::vector<FringeSample> s;
  for (const auto& [k, t] : tally)
    if (t.trials > 0)
      s.push_back({bins.axis_angle(k), static_cast<double>(t.clicks) / t.trials});
  return s;
}

struct Rate {
  std::uint64_t trials = 0;
  std::uint64_t clicks = 0;

  double value() const { return trials ? static_cast<double>(clicks) / trials : 0.0; }
  double variance() const {
    const double r = value();
    return trials ? r * (1.0 - r) / trials : 0.0;
  }
};

struct PairEstimate {
  double p = 0.0;
  double sigma = 0.0;
};

PairEstimate pair_probability(const Rate& a, const Rate& b, double background,
                              const char* pair) {
  if (a.clicks + b.clicks == 0)
    throw DataError(std::string("no clicks recorded for the ") + pair + " configurations");
  const double ra = std::max(a.value() - background, 0.0);
  const double rb = std::max(b.value() - background, 0.0);
  const double sum = ra + rb;
  if (!(sum > 0.0))
    throw DataError(std::string("background subtraction leaves no signal for ") + pair);
  PairEstimate e;
  e.p = ra / sum;
  e.sigma = std::sqrt(rb * rb * a.variance() + ra * ra * b.variance()) / (sum * sum);
  return e;
}

}  // namespace

FringeFit fit_fringe(std::span<const FringeSample> samples) {
  if (samples.size() < 8)
    throw InvalidArgument("a fringe fit needs at least 8 samples, got " +
                          std::to_string(samples.size()));
  std::vector<double> x;
  for (const auto& s : samples) x.push_back(wrap_phase(2.0 * s.alpha_d));
  std::sort(x.begin(), x.end());
  double gap = x.front() + kTwoPi - x.back();
  for (std::size_t i = 1; i < x.size(); ++i) gap = std::max(gap, x[i] - x[i - 1]);
  if (gap > kPi + 1e-12) throw InvalidArgument("fringe samples span less than half a period");

  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d aty = Eigen::Vector3d::Zero();
  for (const auto& s : samples) {
    const double a = 2.0 * s.alpha_d;
    const Eigen::Vector3d row(1.0, std::cos(a), std::sin(a));
    ata.noalias() += row * row.transpose();
    aty.noalias() += row * s.value;
  }
  const Eigen::Vector3d c = ata.ldlt().solve(aty);
  if (!(c(0) > 0.0)) throw FitError("fringe offset is not positive");

  FringeFit fit;
  fit.offset = c(0);
  fit.visibility = std::min(std::hypot(c(1), c(2)) / c(0), 1.0);
  fit.theta = wrap_phase(std::atan2(c(2), -c(1)));
  double ss = 0.0;
  for (const auto& s : samples) {
    const double model = fit.offset * (1.0 - fit.visibility * std::cos(2.0 * s.alpha_d + fit.theta));
    ss += (s.value - model) * (s.value - model);
  }
  fit.residual = std::sqrt(ss / static_cast<double>(samples.size()));
  return fit;
}

PhaseReadout::PhaseReadout(const ReadoutOptions& opts) : bins_(opts.bins), mode_(opts.mode) {
  if (mode_ == ReadoutMode::Camera) {
    synth_ = std::make_shared<phasecam::FrameSynthesizer>(opts.geometry, opts.defects, opts.noise);
    phasecam::RingFit ring;
    ring.center_x = opts.geometry.center_x;
    ring.center_y = opts.geometry.center_y;
    ring.width = opts.geometry.waist_px;
    ring.radius_of_interest = 2.0 * opts.geometry.waist_px;
    analyzer_ = std::make_shared<phasecam::PhaseAnalyzer>(ring, opts.geometry.width,
                                                          opts.geometry.height, opts.bins);
  }
}

int PhaseReadout::bin(double phi_ref, std::uint64_t seed) const {
  if (mode_ == ReadoutMode::Analytic) return bins_.phase_bin(phi_ref);
  return analyzer_->analyze(synth_->render(phi_ref, seed)).min_bin;
}

CalibrationReport calibration_report(std::span<const ProbeCalibration> probes,
                                     double visibility_threshold) {
  if (probes.empty()) throw InvalidArgument("calibration report needs at least one probe");
  CalibrationReport rep;
  rep.probes.assign(probes.begin(), probes.end());
  const double n = static_cast<double>(probes.size());
  for (auto& p : rep.probes) {
    p.deviation = wrap_signed(p.fit.theta - p.theta_theory);
    p.misaligned = p.fit.visibility < visibility_threshold;
    rep.misaligned = rep.misaligned || p.misaligned;
    rep.mean_abs_deviation += std::abs(p.deviation) / n;
    rep.cross_rotation += p.deviation / n;
    rep.mean_visibility += p.fit.visibility / n;
  }
  for (const auto& p : rep.probes) {
    const double d = std::abs(p.deviation) - rep.mean_abs_deviation;
    rep.deviation_std += d * d / n;
    rep.cross_residual += std::abs(p.deviation - rep.cross_rotation) / n;
  }
  rep.deviation_std = std::sqrt(rep.deviation_std);
  return rep;
}

CalibrationReport calibrate(const apparatus::InterferometerConfig& device,
                            const apparatus::DetectionConfig& det, std::uint64_t seed,
                            const CalibrationOptions& opts) {
  device.validate();
  det.validate();
  const PhaseReadout readout(opts.readout);
  const char modes[] = {'H', 'D', 'V', 'A'};
  const double theory[] = {0.0, kPi / 2.0, kPi, 3.0 * kPi / 2.0};

  std::vector<ProbeCalibration> probes;
  for (int i = 0; i < 4; ++i) {
    const auto tally = scan_fringe(qubit::PureQubit::named(modes[i]), device, det, Port::X,
                                   readout, opts.steps, opts.trials_per_step, opts.frame_period,
                                   opts.calibration_offset, child_seed(seed, i));
    const auto samples = to_samples(tally, readout.bins());
    ProbeCalibration p;
    p.mode = modes[i];
    p.fit = fit_fringe(samples);
    p.theta_theory = theory[i];
    probes.push_back(p);
  }
  return calibration_report(probes, opts.visibility_threshold);
}

ScheduleEntry ScheduleEntry::block_l(std::uint64_t trials, std::string id) {
  return {EntryKind::BlockL, 0.0, trials, 0, std::move(id)};
}

ScheduleEntry ScheduleEntry::block_r(std::uint64_t trials, std::string id) {
  return {EntryKind::BlockR, 0.0, trials, 0, std::move(id)};
}

ScheduleEntry ScheduleEntry::fixed(double phase, std::uint64_t trials, std::string id) {
  if (id.empty()) id = "phi-" + std::to_string(static_cast<int>(std::lround(rad_to_deg(phase))));
  return {EntryKind::Fixed, wrap_phase(phase), trials, 0, std::move(id)};
}

ScheduleEntry ScheduleEntry::scan(int steps, std::uint64_t trials_per_step, std::string id) {
  return {EntryKind::Scan, 0.0, trials_per_step, steps, std::move(id)};
}

MeasurementSchedule MeasurementSchedule::standard(std::uint64_t trials) {
  return {{ScheduleEntry::block_l(trials), ScheduleEntry::block_r(trials),
           ScheduleEntry::fixed(0.0, trials), ScheduleEntry::fixed(kPi / 2.0, trials),
           ScheduleEntry::fixed(kPi, trials), ScheduleEntry::fixed(3.0 * kPi / 2.0, trials)}};
}

void MeasurementSchedule::validate(int bins) const {
  const PhaseBins pb(bins);
  bool block_l = false, block_r = false, scan = false;
  bool phase[4] = {false, false, false, false};
  for (const auto& e : entries) {
    if (e.trials < 1) throw InvalidArgument("schedule entry '" + e.id + "' has no trials");
    switch (e.kind) {
      case EntryKind::BlockL: block_l = true; break;
      case EntryKind::BlockR: block_r = true; break;
      case EntryKind::Scan:
        if (e.steps < 1) throw InvalidArgument("scan entry '" + e.id + "' has no steps");
        scan = true;
        break;
      case EntryKind::Fixed:
        for (int q = 0; q < 4; ++q)
          if (pb.phase_bin(e.phase) == pb.phase_bin(q * kPi / 2.0)) phase[q] = true;
        break;
    }
  }
  if (!block_l || !block_r)
    throw InvalidArgument("schedule must contain both blocked-path configurations");
  if (!scan && !(phase[0] && phase[1] && phase[2] && phase[3]))
    throw InvalidArgument("schedule must cover the phases 0, pi/2, pi and 3pi/2");
}

TomographyResult run_tomography(const qubit::PureQubit& input, const MeasurementSchedule& schedule,
                                const apparatus::InterferometerConfig& device,
                                const apparatus::DetectionConfig& det, std::uint64_t seed,
                                const TomographyOptions& opts) {
  device.validate();
  det.validate();
  schedule.validate(opts.readout.bins);
  const PhaseReadout readout(opts.readout);
  const PhaseBins& bins = readout.bins();
  // half width of a folded bin on the φ axis
  const double half_bin = bins.bin_width();

  Rate block_l, block_r, at[4];
  int target_bin[4];
  for (int q = 0; q < 4; ++q) target_bin[q] = bins.phase_bin(q * kPi / 2.0);
  auto tally = [&](const CountRecord& rec, EntryKind kind) {
    Rate* r = nullptr;
    if (kind == EntryKind::BlockL) r = &block_l;  // blocking L leaves the R projector
    if (kind == EntryKind::BlockR) r = &block_r;
    for (int q = 0; q < 4 && !r; ++q)
      if (rec.phase_bin >= 0 && rec.phase_bin == target_bin[q]) r = &at[q];
    if (r) {
      r->trials += rec.trials;
      r->clicks += rec.clicks;
    }
  };

  std::vector<CountRecord> records;
  for (std::size_t j = 0; j < schedule.entries.size(); ++j) {
    const ScheduleEntry& e = schedule.entries[j];
    const std::uint64_t s = child_seed(seed, j);
    switch (e.kind) {
      case EntryKind::BlockL:
      case EntryKind::BlockR: {
        auto cfg = device.with_blocked(e.kind == EntryKind::BlockL ? Blocked::L : Blocked::R);
        cfg.phase_drift = 0.0;
        const std::uint64_t tx = e.trials - e.trials / 2;
        const std::uint64_t ty = e.trials / 2;
        for (Port port : {Port::X, Port::Y}) {
          const std::uint64_t t = port == Port::X ? tx : ty;
          if (t == 0) continue;
          auto d = det;
          d.trials = t;
          records.push_back(apparatus::simulate_counts(input, cfg, d, port,
                                                       child_seed(s, port == Port::X ? 0 : 1),
                                                       e.id, bins.n));
          tally(records.back(), e.kind);
        }
        break;
      }
      case EntryKind::Fixed: {
        const int bin = bins.phase_bin(e.phase);
        const double centre = bins.phase_of(bin);
        double p = 0.0;
        for (int m = 0; m < kLockSamples; ++m) {
          const double phi_ref = centre - half_bin + 2.0 * half_bin * (m + 0.5) / kLockSamples;
          const auto cfg = device.with_phase(wrap_phase(phi_ref + opts.calibration_offset));
          p += apparatus::click_probability(input, cfg, det, Port::X) / kLockSamples;
        }
        CountRecord rec;
        rec.configuration_id = e.id;
        rec.port = Port::X;
        rec.phase_bin = bin;
        rec.trials = e.trials;
        rec.seed = child_seed(s, 0);
        rec.clicks = bernoulli_clicks(p, e.trials, rec.seed);
        tally(rec, e.kind);
        records.push_back(rec);
        break;
      }
      case EntryKind::Scan: {
        const auto scanned = scan_fringe(input, device, det, Port::X, readout, e.steps, e.trials,
                                         opts.frame_period, opts.calibration_offset, s);
        for (const auto& [k, t] : scanned) {
          CountRecord rec;
          rec.configuration_id = e.id;
          rec.port = Port::X;
          rec.phase_bin = k;
          rec.trials = t.trials;
          rec.clicks = t.clicks;
          rec.seed = s;
          tally(rec, e.kind);
          records.push_back(rec);
        }
        break;
      }
    }
  }

  for (int q = 0; q < 4; ++q)
    if (at[q].trials == 0)
      throw DataError("no measurements landed in the phase bin for " +
                      std::to_string(90 * q) + " deg");

  const double bg = opts.background_subtraction ? det.background : 0.0;
  // X at φ = 0, π/2, π, 3π/2 projects onto H, A, V, D
  const PairEstimate r_pair = pair_probability(block_l, block_r, bg, "R/L");
  const PairEstimate h_pair = pair_probability(at[0], at[2], bg, "H/V");
  const PairEstimate d_pair = pair_probability(at[3], at[1], bg, "D/A");

  ProjectionProbabilities probs{r_pair.p, 1.0 - r_pair.p, h_pair.p,
                                1.0 - h_pair.p, d_pair.p, 1.0 - d_pair.p};
  const qubit::StokesVector stokes = qubit::stokes_from_probabilities(
      probs.p0, probs.p1, probs.pH, probs.pV, probs.pD, probs.pA);
  qubit::DensityMatrix rho = qubit::density_from_stokes(stokes);
  if (opts.physical_projection) rho = qubit::project_physical(rho);

  const qubit::StokesVector n = qubit::pure_to_stokes(input);
  const double sigma2 = n.s1 * n.s1 * r_pair.sigma * r_pair.sigma +
                        n.s2 * n.s2 * h_pair.sigma * h_pair.sigma +
                        n.s3 * n.s3 * d_pair.sigma * d_pair.sigma;
  // σ_S = 2σ_p and F = ½(1 + n·S)
  const double fid = qubit::fidelity(rho, input);
  return TomographyResult{std::move(records), probs, stokes, std::move(rho), fid,
                          std::sqrt(sigma2)};
}

void ErrorBudget::validate() const {
  if (!(visibility >= 0.0 && visibility <= 1.0))
    throw InvalidArgument("visibility must lie in [0, 1]");
  if (!(leakage >= 0.0 && leakage <= 1.0)) throw InvalidArgument("leakage must lie in [0, 1]");
  if (!std::isfinite(calibration_offset))
    throw InvalidArgument("calibration offset must be finite");
  if (!(coupling_imbalance >= 0.0 && coupling_imbalance <= 1.0))
    throw InvalidArgument("coupling imbalance must lie in [0, 1]");
}

ErrorBudget ErrorBudget::of(const apparatus::InterferometerConfig& device,
                            double calibration_offset) {
  auto leak = [](const apparatus::ProjectorPath& p, int other) {
    const auto it = p.leakage.find(other);
    return it == p.leakage.end() ? 0.0 : it->second;
  };
  ErrorBudget b;
  b.visibility = device.coherence;
  b.leakage = std::max(leak(device.r, device.l.target_l), leak(device.l, device.r.target_l));
  b.calibration_offset = calibration_offset;
  const double sum = device.r.efficiency + device.l.efficiency;
  b.coupling_imbalance =
      sum > 0.0 ? std::abs(device.r.efficiency - device.l.efficiency) / sum : 0.0;
  return b;
}

FidelityBounds fidelity_bounds(const ErrorBudget& budget) {
  budget.validate();
  FidelityBounds f;
  f.visibility_loss = budget.coupling_imbalance * budget.coupling_imbalance / 2.0;
  f.equatorial = 0.5 * (1.0 + budget.visibility - f.visibility_loss) -
                 budget.calibration_offset * budget.calibration_offset;
  f.poles = 1.0 - budget.leakage;
  return f;
}

double fidelity_bound_for(const qubit::PureQubit& input, const FidelityBounds& bounds) {
  // weight of the pole bound is the squared polar Stokes component
  const double s1 = qubit::pure_to_stokes(input).s1;
  return s1 * s1 * bounds.poles + (1.0 - s1 * s1) * bounds.equatorial;
}

double efficiency_budget(std::span<const EfficiencyStage> stages) {
  double total = 1.0;
  for (const auto& s : stages) {
    if (!(s.value >= 0.0 && s.value <= 1.0))
      throw InvalidArgument("efficiency of stage '" + s.name + "' must lie in [0, 1]");
    total *= s.value;
  }
  return total;
}

double efficiency_budget(std::span<const double> stages) {
  std::vector<EfficiencyStage> named;
  for (std::size_t i = 0; i < stages.size(); ++i)
    named.push_back({"stage " + std::to_string(i), stages[i]});
  return efficiency_budget(std::span<const EfficiencyStage>(named));
}

std::vector<EfficiencyStage> device_efficiency_stages() {
  return {{"input beam splitter and mode filtering", 0.5},
          {"hologram diffraction and optics", 0.8},
          {"fiber coupling", 0.8},
          {"reference-beam splitter", 0.75}};
}

}  // namespace oamtomo::tomo
