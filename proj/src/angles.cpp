#include "oamtomo/angles.hpp"

#include <cmath>

namespace oamtomo {

namespace {

double reduce(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  // fmod of a tiny negative number can round up to exactly `period`
  if (r >= period) r = 0.0;
  return r;
}

}  // namespace

double wrap_phase(double phi) { return reduce(phi, kTwoPi); }

double wrap_axis(double alpha) { return reduce(alpha, kPi); }

double wrap_signed(double delta) {
  double r = reduce(delta + kPi, kTwoPi) - kPi;
  if (r <= -kPi) r += kTwoPi;
  return r;
}

double db_to_ratio(double db) { return std::pow(10.0, -db / 10.0); }

}  // namespace oamtomo

#include <string>

#include "oamtomo/error.hpp"

namespace oamtomo {

PhaseBins::PhaseBins(int bins) : n(bins) {
  if (bins < 8 || bins % 8 != 0)
    throw InvalidArgument("angular bin count must be a positive multiple of 8, got " +
                          std::to_string(bins));
}

int PhaseBins::direction_bin(double angle) const {
  const int k = static_cast<int>(std::floor(wrap_phase(angle) / bin_width() + 0.5));
  return k % n;
}

int PhaseBins::axis_bin(double alpha) const { return direction_bin(wrap_axis(alpha)) % folded(); }

int PhaseBins::phase_bin(double phi) const { return axis_bin((phi - kPi) / 2.0); }

double PhaseBins::phase_of(int k) const { return wrap_phase(2.0 * axis_angle(k) + kPi); }

}  // namespace oamtomo
