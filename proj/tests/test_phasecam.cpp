#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oamtomo/angles.hpp"
#include "oamtomo/error.hpp"
#include "oamtomo/modes.hpp"
#include "oamtomo/phasecam.hpp"
#include "oamtomo/seed.hpp"

using namespace oamtomo;
using namespace oamtomo::phasecam;

namespace {

RingFit true_ring(const FrameGeometry& g) {
  RingFit r;
  r.center_x = g.center_x;
  r.center_y = g.center_y;
  r.width = g.waist_px;
  r.radius_of_interest = 2 * g.waist_px;
  return r;
}

FrameGeometry deep() {
  FrameGeometry g;
  g.bit_depth = 16;
  return g;
}

Noise deep_noise() {
  Noise n;
  n.peak_counts = 60000;
  return n;
}

double phase_error_deg(double est, double truth) { return rad_to_deg(std::abs(wrap_signed(est - truth))); }

double stddev(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / v.size());
}

std::vector<PhaseFrame> uniform_stack(const FrameSynthesizer& s, int count) {
  std::vector<PhaseFrame> out;
  for (int i = 0; i < count; ++i) out.push_back(s.render(kTwoPi * (i + 0.5) / count));
  return out;
}

}  // namespace

TEST_CASE("synthesized frames") {
  const FrameGeometry g;
  const FrameSynthesizer s(g);
  SUBCASE("phi = pi gives a horizontal dark line through the centre") {
    const auto f = s.render(kPi).to_gray();
    const int c = static_cast<int>(g.center_x);
    double row = 0.0, col = 0.0;
    for (int k = -60; k < 60; ++k) {
      row += f.at(c + k, c - 1) + f.at(c + k, c);
      col += f.at(c - 1, c + k) + f.at(c, c + k);
    }
    CHECK(row < 0.1 * col);
  }
  SUBCASE("2 pi periodicity") {
    CHECK(s.render(0.0) == s.render(kTwoPi));
    CHECK(s.render(1.0) == s.render(1.0 + kTwoPi));
  }
  SUBCASE("offset deforms the pattern, imbalance brightens one lobe") {
    Defects d;
    d.offset = 0.1;
    const FrameSynthesizer off(g, d);
    Defects b;
    b.lobe_imbalance = 1.3;
    const FrameSynthesizer bright(g, b);
    for (double phi : {0.3, 2.0, 4.4}) {
      const auto ideal = s.render(phi);
      const auto shifted = off.render(phi);
      int diff = 0;
      for (std::size_t i = 0; i < ideal.pixels().size(); ++i)
        diff = std::max(diff, std::abs(int(ideal.pixels()[i]) - int(shifted.pixels()[i])));
      CHECK(diff > 5);

      const auto f = bright.render(phi).to_gray();
      const double a = modes::dark_axis_angle(phi);
      double peak1 = 0.0, peak2 = 0.0;
      for (int r = 0; r < g.height; ++r)
        for (int c = 0; c < g.width; ++c) {
          const double x = c + 0.5 - g.center_x, y = g.center_y - (r + 0.5);
          double& p = x * -std::sin(a) + y * std::cos(a) > 0 ? peak1 : peak2;
          p = std::max(p, f.at(c, r));
        }
      CHECK(peak1 / peak2 == doctest::Approx(1.3).epsilon(0.02));
    }
  }
  SUBCASE("ground truth and validation") {
    CHECK(*s.render(1.25).phi_true() == doctest::Approx(1.25));
    Defects d;
    d.offset = 0.6;
    CHECK_THROWS_AS((FrameSynthesizer{g, d}), InvalidArgument);
    FrameGeometry small = g;
    small.width = small.height = 48;
    CHECK_THROWS_AS(FrameSynthesizer{small}, InvalidArgument);
    FrameGeometry wide = g;
    wide.waist_px = 100;
    CHECK_THROWS_AS(FrameSynthesizer{wide}, InvalidArgument);
  }
}

TEST_CASE("enhancement") {
  SUBCASE("flat frames are unchanged") {
    const PhaseFrame flat(64, 64, 8, std::vector<std::uint16_t>(64 * 64, 77));
    CHECK(enhance(flat) == flat);
  }
  SUBCASE("dead pixel removed") {
    const FrameSynthesizer s(FrameGeometry{});
    auto f = s.render(1.0).to_gray();
    f.at(20, 30) = 255;
    const auto out = enhance(PhaseFrame::from_gray(f, 8));
    int lo = 65535, hi = 0;
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc)
        if (dr || dc) {
          lo = std::min<int>(lo, out.at(20 + dc, 30 + dr));
          hi = std::max<int>(hi, out.at(20 + dc, 30 + dr));
        }
    CHECK(out.at(20, 30) >= lo);
    CHECK(out.at(20, 30) <= hi);
    CHECK(out.at(20, 30) < 255);
  }
  SUBCASE("background noise is reduced") {
    Noise n;
    n.background = 0.1;
    n.shot_noise = true;
    const FrameGeometry g;
    const FrameSynthesizer s(g, {}, n);
    const auto in = s.render(2.0, 42);
    const auto out = enhance(in);
    std::vector<double> a, b;
    for (int r = 0; r < g.height; ++r)
      for (int c = 0; c < g.width; ++c)
        if (std::hypot(c + 0.5 - g.center_x, r + 0.5 - g.center_y) > 2.2 * g.waist_px) {
          a.push_back(in.at(c, r));
          b.push_back(out.at(c, r));
        }
    CHECK(stddev(b) < stddev(a));
  }
}

TEST_CASE("ring fit") {
  const FrameGeometry g;
  const FrameSynthesizer s(g);
  const auto stack = uniform_stack(s, 360);
  const RingFit fit = fit_ring(stack);
  CHECK(std::abs(fit.center_x - g.center_x) < 0.5);
  CHECK(std::abs(fit.center_y - g.center_y) < 0.5);
  CHECK(fit.radius_of_interest == doctest::Approx(2.0 * fit.width));

  FrameGeometry moved = g;
  moved.center_x += 5;
  moved.center_y += 3;
  const auto shifted = fit_ring(uniform_stack(FrameSynthesizer(moved), 360));
  CHECK(std::abs(shifted.center_x - fit.center_x - 5) < 0.5);
  CHECK(std::abs(shifted.center_y - fit.center_y - 3) < 0.5);

  // strong background with an off-centre beam: raw moments are pulled to the
  // image centre, the enhanced fit is not
  FrameGeometry off = g;
  off.center_x = 120;
  off.center_y = 140;
  Noise bright;
  bright.background = 0.6;
  const auto bg_stack = uniform_stack(FrameSynthesizer(off, {}, bright), 90);
  const auto raw = moment_estimate(average(bg_stack));
  CHECK(std::hypot(raw.center_x - off.center_x, raw.center_y - off.center_y) > 0.5);
  const auto enhanced = fit_ring(bg_stack);
  CHECK(std::abs(enhanced.center_x - off.center_x) < 0.5);
  CHECK(std::abs(enhanced.center_y - off.center_y) < 0.5);

  const PhaseFrame dark(64, 64, 8, std::vector<std::uint16_t>(64 * 64, 0));
  std::vector<PhaseFrame> empty{dark};
  CHECK_THROWS_AS(fit_ring(empty), FitError);
}

TEST_CASE("phase extraction") {
  const FrameGeometry g = deep();
  const FrameSynthesizer s(g, {}, deep_noise());
  const RingFit ring = true_ring(g);

  SUBCASE("phi = pi lands in bin 0") {
    const auto e = extract_phase(s.render(kPi), ring);
    CHECK(e.min_bin == 0);
    CHECK(e.alpha_d == doctest::Approx(0.0));
    CHECK(e.phi == doctest::Approx(kPi));
    CHECK(e.profile.processed.size() == 60);
    CHECK(e.profile.raw.size() == 120);
  }

  SUBCASE("frames away from bin boundaries come back in the true bin") {
    const PhaseAnalyzer an(ring, g.width, g.height);
    const PhaseBins bins(120);
    Rng rng(8);
    for (int i = 0; i < 120; ++i) {
      const double phi = rng.uniform(0, kTwoPi);
      const double to_edge = std::abs(std::remainder(phi - kPi, 2 * bins.bin_width())) ;
      if (std::abs(to_edge - bins.bin_width()) < deg_to_rad(0.1)) continue;
      const auto e = an.analyze(s.render(phi));
      CHECK(e.min_bin == bins.phase_bin(phi));
      CHECK(phase_error_deg(e.phi, phi) <= 3.0);
    }
  }

  SUBCASE("defect frames") {
    const PhaseBins bins(120);
    Defects off;
    off.offset = 0.1;
    off.offset_angle = 0.5;
    Defects tilt;
    tilt.tilt = 1e-4;
    tilt.tilt_angle = 0.7;
    for (const Defects& d : {off, tilt}) {
      const FrameSynthesizer ds(g, d, deep_noise());
      const PhaseAnalyzer an(ring, g.width, g.height);
      for (int k = 0; k < 60; k += 7) {
        const double phi = wrap_phase(kPi + 2 * bins.axis_angle(k) + deg_to_rad(1.0));
        CHECK(an.analyze(ds.render(phi)).min_bin == k);
      }
    }
  }

  SUBCASE("lobe imbalance moves the result by at most one bin") {
    Defects d;
    d.lobe_imbalance = 1.5;
    const FrameSynthesizer ds(g, d, deep_noise());
    const PhaseAnalyzer an(ring, g.width, g.height);
    for (int i = 0; i < 24; ++i) {
      const double phi = kTwoPi * (i + 0.37) / 24;
      const int a = an.analyze(s.render(phi)).min_bin;
      const int b = an.analyze(ds.render(phi)).min_bin;
      const int diff = std::abs(a - b);
      CHECK(std::min(diff, 60 - diff) <= 1);
    }
  }

  SUBCASE("quarter turn shifts the dark axis by 90 degrees") {
    const PhaseAnalyzer an(ring, g.width, g.height);
    const RingFit rring = rotate90(ring, g.width, g.height);
    const PhaseAnalyzer ran(rring, g.width, g.height);
    for (int i = 0; i < 16; ++i) {
      const double phi = kTwoPi * (i + 0.21) / 16;
      const auto f = s.render(phi);
      const auto a = an.analyze(f);
      const auto b = ran.analyze(rotate90(f));
      const int diff = std::abs(b.min_bin - (a.min_bin + 30) % 60);
      CHECK(std::min(diff, 60 - diff) <= 1);
      CHECK(phase_error_deg(b.phi, *rotate90(f).phi_true()) <= 6.0);
    }
  }

  SUBCASE("global intensity scaling does not change the result") {
    const PhaseAnalyzer an(ring, g.width, g.height);
    for (double phi : {0.4, 1.9, 3.3, 5.6}) {
      auto img = s.render(phi).to_gray();
      const auto base = an.analyze(img);
      for (double k : {0.5, 2.0, 3.0, 0.01}) {
        auto scaled = img;
        for (double& v : scaled.pixels) v *= k;
        CHECK(an.analyze(scaled).min_bin == base.min_bin);
      }
    }
  }

  SUBCASE("smoothing moves the minimum by at most 22.5 degrees") {
    const PhaseAnalyzer an(ring, g.width, g.height);
    for (int i = 0; i < 36; ++i) {
      const auto e = an.analyze(s.render(kTwoPi * (i + 0.5) / 36));
      const auto& sub = e.profile.subtracted;
      const int raw_min = static_cast<int>(std::min_element(sub.begin(), sub.end()) - sub.begin());
      const int diff = std::abs(raw_min - e.min_bin);
      CHECK(rad_to_deg(std::min(diff, 60 - diff) * kTwoPi / 120) <= 22.5);
    }
  }

  SUBCASE("determinism") {
    const auto f = s.render(2.2);
    const auto a = extract_phase(f, ring);
    const auto b = extract_phase(f, ring);
    CHECK(a.min_bin == b.min_bin);
    CHECK(a.profile.processed == b.profile.processed);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(PhaseAnalyzer(ring, g.width, g.height, 100), InvalidArgument);
    RingFit far = ring;
    far.center_x = -400;
    far.center_y = -400;
    far.radius_of_interest = 20;
    CHECK_THROWS_AS(extract_phase(s.render(1.0), far), DataError);
  }
}

TEST_CASE("frames round trip through the gray representation") {
  const FrameSynthesizer s(FrameGeometry{});
  const auto f = s.render(0.7);
  CHECK(PhaseFrame::from_gray(f.to_gray(), 8, f.exposure(), f.phi_true()) == f);
  CHECK_THROWS_AS(PhaseFrame(64, 64, 8, std::vector<std::uint16_t>(64 * 64, 300)), InvalidArgument);
}
