#include <doctest.h>

#include <cmath>
#include <vector>

#include "oamtomo/angles.hpp"
#include "oamtomo/apparatus.hpp"
#include "oamtomo/error.hpp"
#include "oamtomo/seed.hpp"
#include "oamtomo/tomo.hpp"

using namespace oamtomo;
using namespace oamtomo::tomo;
using apparatus::DetectionConfig;
using apparatus::InterferometerConfig;
using apparatus::Port;
using qubit::PureQubit;

namespace {

// Fringe samples straight from the device model: reference phase φ maps to
// the dark axis α = (φ − π)/2.
std::vector<FringeSample> device_fringe(const PureQubit& q, const InterferometerConfig& dev,
                                        const DetectionConfig& det, int n) {
  std::vector<FringeSample> out;
  for (int k = 0; k < n; ++k) {
    const double phi = kTwoPi * k / n;
    out.push_back({(phi - kPi) / 2, apparatus::click_probability(q, dev.with_phase(phi), det, Port::X)});
  }
  return out;
}

DetectionConfig quiet(std::uint64_t trials = 1'000'000) {
  DetectionConfig d;
  d.background = 0.0;
  d.trials = trials;
  return d;
}

// linear regime of the detector, where the click fringe is an exact sinusoid
DetectionConfig faint() {
  DetectionConfig d = quiet();
  d.mean_photons = 1e-4;
  return d;
}

}  // namespace

TEST_CASE("fringe fit on noiseless device fringes") {
  const auto dev = InterferometerConfig::ideal();
  const char modes[] = {'H', 'D', 'V', 'A'};
  for (int i = 0; i < 4; ++i) {
    const auto fit = fit_fringe(device_fringe(PureQubit::named(modes[i]), dev, faint(), 36));
    CHECK(rad_to_deg(std::abs(wrap_signed(fit.theta - i * kPi / 2))) < 0.5);
    CHECK(fit.visibility == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(fit.residual < 1e-6);
  }
  // equal-weight inputs with arbitrary phase: θ equals the input phase
  for (double phase : {0.2, 1.7, 3.9, 5.5}) {
    const auto q = PureQubit(std::sqrt(0.5), std::polar(std::sqrt(0.5), phase));
    const auto fit = fit_fringe(device_fringe(q, dev, faint(), 24));
    CHECK(std::abs(wrap_signed(fit.theta - phase)) < 1e-6);
  }
}

TEST_CASE("fringe fit input checks") {
  const auto dev = InterferometerConfig::ideal();
  const auto H = PureQubit::named('H');
  CHECK_THROWS_AS(fit_fringe(device_fringe(H, dev, quiet(), 6)), InvalidArgument);
  auto half = device_fringe(H, dev, quiet(), 40);
  half.resize(12);  // 2α spans only a third of a turn
  CHECK_THROWS_AS(fit_fringe(half), InvalidArgument);
  // inverted fringe is reported with V ≥ 0 and θ moved by π
  auto inv = device_fringe(H, dev, faint(), 24);
  double mean = 0.0;
  for (const auto& s : inv) mean += s.value / inv.size();
  for (auto& s : inv) s.value = 2 * mean - s.value;
  const auto fit = fit_fringe(inv);
  CHECK(fit.visibility == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::abs(wrap_signed(fit.theta - kPi)) < 1e-6);
}

TEST_CASE("published calibration angles") {
  const double deg[] = {-0.1, 86.5, 176.1, 268.6};
  const char names[] = {'H', 'D', 'V', 'A'};
  std::vector<ProbeCalibration> probes;
  for (int i = 0; i < 4; ++i) {
    ProbeCalibration p;
    p.mode = names[i];
    p.fit.theta = wrap_phase(deg_to_rad(deg[i]));
    p.fit.visibility = 0.93;
    p.theta_theory = i * kPi / 2;
    probes.push_back(p);
  }
  const auto rep = calibration_report(probes);
  // |deviations| 0.1, 3.5, 3.9, 1.4 → 2.225 ± 1.55
  CHECK(rad_to_deg(rep.mean_abs_deviation) == doctest::Approx(2.225));
  CHECK(rad_to_deg(rep.deviation_std) == doctest::Approx(std::sqrt(9.6275 / 4)));
  CHECK(rad_to_deg(rep.cross_rotation) == doctest::Approx(-2.225));
  CHECK_FALSE(rep.misaligned);
}

TEST_CASE("calibration scans") {
  CalibrationOptions opts;
  opts.steps = 360;
  SUBCASE("ideal device") {
    const auto rep = calibrate(InterferometerConfig::ideal(), quiet(), 1, opts);
    CHECK(rad_to_deg(rep.mean_abs_deviation) < 0.5);
    CHECK(rep.mean_visibility == doctest::Approx(1.0).epsilon(0.01));
    CHECK_FALSE(rep.misaligned);
  }
  SUBCASE("visibility 0.93 is recovered against the generating fringe") {
    const auto dev = InterferometerConfig::calibration();
    const DetectionConfig det;
    const auto rep = calibrate(dev, det, 2, opts);
    for (const auto& p : rep.probes) {
      const double v = apparatus::fringe_visibility(PureQubit::named(p.mode), dev, det, Port::X);
      CHECK(std::abs(p.fit.visibility - v) <= 0.02 * v);
    }
  }
  SUBCASE("injected offset") {
    auto o = opts;
    o.calibration_offset = deg_to_rad(5.0);
    const auto rep = calibrate(InterferometerConfig::calibration(), DetectionConfig{}, 3, o);
    CHECK(std::abs(rad_to_deg(rep.mean_abs_deviation) - 5.0) < 0.5);
    CHECK(std::abs(rad_to_deg(rep.cross_rotation) - 5.0) < 0.5);
  }
  SUBCASE("low visibility flags misalignment") {
    auto dev = InterferometerConfig::calibration();
    dev.coherence = 0.5;
    const auto rep = calibrate(dev, DetectionConfig{}, 4, opts);
    CHECK(rep.misaligned);
  }
}

TEST_CASE("tomography") {
  const auto schedule = MeasurementSchedule::standard(1'000'000);
  SUBCASE("ideal device, no background") {
    const auto r = run_tomography(PureQubit::named('R'), schedule, InterferometerConfig::ideal(),
                                  quiet(), 10);
    CHECK(r.fidelity >= 0.999);
    CHECK(r.probabilities.p0 + r.probabilities.p1 == doctest::Approx(1.0));
    CHECK(r.counts.size() == 8);  // blocked entries report both ports
  }
  SUBCASE("leakage alone limits the pole fidelity to 1 - eps") {
    auto dev = InterferometerConfig::ideal();
    dev.l.leakage[+1] = 0.01;
    const auto r = run_tomography(PureQubit::named('R'), schedule, dev, quiet(), 11);
    CHECK(std::abs(r.fidelity - 0.99) <= 3 * r.fidelity_sigma + 1e-4);
  }
  SUBCASE("reproducible from the seed") {
    const auto dev = InterferometerConfig::nominal();
    const auto a = run_tomography(PureQubit::named('D'), schedule, dev, DetectionConfig{}, 12);
    const auto b = run_tomography(PureQubit::named('D'), schedule, dev, DetectionConfig{}, 12);
    REQUIRE(a.counts.size() == b.counts.size());
    for (std::size_t i = 0; i < a.counts.size(); ++i) CHECK(a.counts[i].clicks == b.counts[i].clicks);
    CHECK(a.fidelity == b.fidelity);
    CHECK(a.rho.matrix() == b.rho.matrix());
  }
  SUBCASE("random inputs stay below the bound") {
    const auto dev = InterferometerConfig::nominal();
    const auto bounds = fidelity_bounds(ErrorBudget::of(dev));
    Rng rng(99);
    for (int i = 0; i < 12; ++i) {
      const auto q = PureQubit::from_bloch(std::acos(rng.uniform(-1, 1)), rng.uniform(0, kTwoPi));
      const auto r = run_tomography(q, MeasurementSchedule::standard(200'000), dev, DetectionConfig{},
                                    child_seed(99, i));
      CHECK(r.fidelity <= fidelity_bound_for(q, bounds) + 3 * r.fidelity_sigma);
      CHECK(r.fidelity > 0.9);
    }
  }
  SUBCASE("scanned fringe: theta follows the input phase and the offset") {
    MeasurementSchedule s;
    s.entries = {ScheduleEntry::block_l(100'000), ScheduleEntry::block_r(100'000),
                 ScheduleEntry::scan(720, 20'000)};
    TomographyOptions opts;
    opts.calibration_offset = deg_to_rad(4.0);
    for (double phase : {0.4, 2.5, 4.1}) {
      const auto q = PureQubit(std::sqrt(0.5), std::polar(std::sqrt(0.5), phase));
      // no leakage here: −25 dB leakage alone pulls θ by up to ~2√ε
      const auto r = run_tomography(q, s, InterferometerConfig::calibration(), DetectionConfig{}, 13, opts);
      const PhaseBins bins(120);
      std::vector<FringeSample> samples;
      for (const auto& c : r.counts)
        if (c.phase_bin >= 0) samples.push_back({bins.axis_angle(c.phase_bin), c.rate()});
      const auto fit = fit_fringe(samples);
      CHECK(std::abs(wrap_signed(fit.theta - phase - deg_to_rad(4.0))) <= bins.bin_width());
    }
  }
}

TEST_CASE("schedules") {
  CHECK_NOTHROW(MeasurementSchedule::standard().validate());
  auto s = MeasurementSchedule::standard();
  s.entries.erase(s.entries.begin());
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = MeasurementSchedule::standard();
  s.entries.pop_back();
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  CHECK(ScheduleEntry::fixed(kPi / 2, 10).id == "phi-90");
}

TEST_CASE("fidelity bounds") {
  ErrorBudget b;
  b.visibility = 0.99;
  CHECK(std::abs(fidelity_bounds(b).equatorial - 0.995) < 1e-12);
  CHECK(std::abs(fidelity_bounds(b).poles - 1.0) < 1e-12);

  b = {};
  b.leakage = 0.003;
  CHECK(std::abs(fidelity_bounds(b).poles - 0.997) < 1e-12);
  b.leakage = db_to_ratio(25.0);
  CHECK(std::abs(fidelity_bounds(b).poles - (1 - std::pow(10.0, -2.5))) < 1e-12);

  b = {};
  b.calibration_offset = deg_to_rad(5.0);
  const double drop = 1.0 - fidelity_bounds(b).equatorial;
  CHECK(std::abs(drop - std::pow(5 * kPi / 180, 2)) < 1e-12);
  CHECK(drop == doctest::Approx(0.0076).epsilon(0.01));
  CHECK(drop < 0.01);

  b = {};
  b.visibility = 0.99;
  b.coupling_imbalance = 0.1;
  b.calibration_offset = deg_to_rad(2.0);
  const auto f = fidelity_bounds(b);
  CHECK(std::abs(f.visibility_loss - 0.005) < 1e-12);
  CHECK(std::abs(f.equatorial - (0.5 * (1 + 0.99 - 0.005) - std::pow(deg_to_rad(2.0), 2))) < 1e-12);

  const auto nominal = ErrorBudget::of(InterferometerConfig::nominal());
  CHECK(nominal.visibility == doctest::Approx(0.99));
  CHECK(nominal.leakage == doctest::Approx(std::pow(10.0, -2.5)));
  CHECK(nominal.coupling_imbalance == doctest::Approx(0.0));
  const auto measured = ErrorBudget::of(InterferometerConfig::measured());
  CHECK(measured.coupling_imbalance == doctest::Approx((0.823 - 0.778) / (0.823 + 0.778)));

  const auto fb = fidelity_bounds(nominal);
  CHECK(fidelity_bound_for(PureQubit::named('R'), fb) == doctest::Approx(fb.poles));
  CHECK(fidelity_bound_for(PureQubit::named('A'), fb) == doctest::Approx(fb.equatorial));

  ErrorBudget bad;
  bad.visibility = 1.2;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("efficiency budget") {
  const std::vector<double> chain = {0.5, 0.8, 0.8, 0.75};
  CHECK(std::abs(efficiency_budget(chain) - 0.24) < 1e-12);
  CHECK(efficiency_budget(std::vector<double>{}) == 1.0);
  CHECK(efficiency_budget(std::vector<double>{0.64}) == 0.64);
  CHECK(efficiency_budget(std::vector<double>{0.78}) == 0.78);
  CHECK(std::abs(efficiency_budget(device_efficiency_stages()) - 0.24) < 1e-12);
  CHECK_THROWS_AS(efficiency_budget(std::vector<double>{1.1}), InvalidArgument);
}
