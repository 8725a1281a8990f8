#include "oamtomo/modes.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "oamtomo/angles.hpp"
#include "oamtomo/error.hpp"

namespace oamtomo::modes {

namespace {

// Generalized Laguerre polynomial L^alpha_n(x) by the three-term recurrence.
double laguerre(int n, double alpha, double x) {
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = 1.0 + alpha - x;
  for (int k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

double normalization(const ModeIndex& m) {
  const int al = std::abs(m.l);
  // p!/(|l|+p)! via log-gamma keeps large indices finite
  const double ratio = std::exp(std::lgamma(m.p + 1.0) - std::lgamma(al + m.p + 1.0));
  return std::sqrt(2.0 / kPi * ratio);
}

}  // namespace

ModeIndex::ModeIndex(int l_, int p_) : l(l_), p(p_) {
  if (p_ < 0) throw InvalidArgument("radial index p must be non-negative");
}

int ModeIndex::order() const { return std::abs(l) + 2 * p; }

BeamGeometry::BeamGeometry(double waist, double wavelength, double z)
    : w0_(waist), wavelength_(wavelength), z_(z) {
  if (!(waist > 0.0) || !std::isfinite(waist))
    throw InvalidArgument("beam waist must be positive");
  if (!(wavelength > 0.0) || !std::isfinite(wavelength))
    throw InvalidArgument("wavelength must be positive");
  if (!std::isfinite(z)) throw InvalidArgument("axial position must be finite");
}

double BeamGeometry::rayleigh_length() const { return kPi * w0_ * w0_ / wavelength_; }

double BeamGeometry::radius() const {
  const double q = z_ / rayleigh_length();
  return w0_ * std::sqrt(1.0 + q * q);
}

double BeamGeometry::curvature_radius() const {
  if (z_ == 0.0) return std::numeric_limits<double>::infinity();
  const double q = rayleigh_length() / z_;
  return z_ * (1.0 + q * q);
}

double BeamGeometry::gouy_phase() const { return std::atan(z_ / rayleigh_length()); }

double BeamGeometry::wavenumber() const { return kTwoPi / wavelength_; }

GridSpec reference_grid(const BeamGeometry& geom, int max_order) {
  GridSpec g;
  g.n = 256;
  g.half_width = 4.0 * geom.radius() * std::sqrt(static_cast<double>(max_order) + 1.0);
  return g;
}

ComplexField::ComplexField(std::size_t n, double pitch, double center_x, double center_y,
                           std::vector<Complex> samples)
    : n_(n), pitch_(pitch), cx_(center_x), cy_(center_y), samples_(std::move(samples)) {
  if (n < 2) throw InvalidArgument("field grid needs N >= 2");
  if (!(pitch > 0.0)) throw InvalidArgument("field pitch must be positive");
  if (samples_.size() != n * n)
    throw InvalidArgument("field sample count " + std::to_string(samples_.size()) +
                          " does not match N*N");
}

double ComplexField::x(std::size_t ix) const {
  return cx_ + (static_cast<double>(ix) + 0.5 - 0.5 * static_cast<double>(n_)) * pitch_;
}

double ComplexField::y(std::size_t iy) const {
  return cy_ + (static_cast<double>(iy) + 0.5 - 0.5 * static_cast<double>(n_)) * pitch_;
}

double ComplexField::norm_squared() const {
  double s = 0.0;
  for (const auto& v : samples_) s += std::norm(v);
  return s * pitch_ * pitch_;
}

std::vector<double> ComplexField::intensity() const {
  std::vector<double> out(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) out[i] = std::norm(samples_[i]);
  return out;
}

bool ComplexField::same_grid(const ComplexField& other) const {
  return n_ == other.n_ && pitch_ == other.pitch_ && cx_ == other.cx_ && cy_ == other.cy_;
}

EquatorialSuperposition::EquatorialSuperposition(double relative_phase, double a, double b)
    : phi_(wrap_phase(relative_phase)), a_(a), b_(b) {
  if (!std::isfinite(relative_phase)) throw InvalidArgument("relative phase must be finite");
  if (a < 0.0 || b < 0.0) throw InvalidArgument("superposition amplitudes must be non-negative");
  if (std::abs(a * a + b * b - 1.0) > 1e-12)
    throw InvalidArgument("superposition amplitudes must satisfy a^2 + b^2 = 1");
}

EquatorialSuperposition EquatorialSuperposition::equal(double relative_phase) {
  return EquatorialSuperposition(relative_phase, std::sqrt(0.5), std::sqrt(0.5));
}

Complex lg_amplitude(const ModeIndex& mode, const BeamGeometry& geom, double x, double y) {
  const double w = geom.radius();
  const double r2 = x * x + y * y;
  const int al = std::abs(mode.l);

  // (sqrt2·r/w)^|l|·e^{ilθ} = ((x ± iy)·sqrt2/w)^|l|, smooth through r = 0
  const Complex xy(x * std::sqrt(2.0) / w, (mode.l >= 0 ? y : -y) * std::sqrt(2.0) / w);
  Complex vortex(1.0, 0.0);
  for (int k = 0; k < al; ++k) vortex *= xy;

  const double envelope = std::exp(-r2 / (w * w));
  const double radial = laguerre(mode.p, al, 2.0 * r2 / (w * w));

  double phase = (2.0 * mode.p + al + 1.0) * geom.gouy_phase();
  const double R = geom.curvature_radius();
  if (std::isfinite(R)) phase -= geom.wavenumber() * r2 / (2.0 * R);

  return normalization(mode) / w * envelope * radial * vortex * std::polar(1.0, phase);
}

ComplexField lg_field(const ModeIndex& mode, const BeamGeometry& geom, const GridSpec& grid) {
  if (grid.n < 2 || !(grid.half_width > 0.0))
    throw InvalidArgument("grid needs N >= 2 and a positive half-width");
  const double needed = 4.0 * geom.radius() * std::sqrt(mode.order() + 1.0);
  const double available =
      grid.half_width - std::max(std::abs(grid.center_x), std::abs(grid.center_y));
  if (available < needed)
    throw GridTooSmall("grid half-width " + std::to_string(available) + " m below the " +
                       std::to_string(needed) + " m needed for LG(l=" + std::to_string(mode.l) +
                       ",p=" + std::to_string(mode.p) + ")");

  const std::size_t n = grid.n;
  const double pitch = grid.pitch();
  std::vector<Complex> samples(n * n);
  for (std::size_t iy = 0; iy < n; ++iy) {
    const double y = grid.center_y + (iy + 0.5 - 0.5 * n) * pitch;
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double x = grid.center_x + (ix + 0.5 - 0.5 * n) * pitch;
      samples[iy * n + ix] = lg_amplitude(mode, geom, x, y);
    }
  }
  return ComplexField(n, pitch, grid.center_x, grid.center_y, std::move(samples));
}

Complex overlap(const ComplexField& f, const ComplexField& g) {
  if (!f.same_grid(g)) throw GridMismatch("overlap requires identical grids");
  const auto a = f.samples();
  const auto b = g.samples();
  // expanded product so that overlap(f,g) == conj(overlap(g,f)) bit for bit
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  const double area = f.pitch() * f.pitch();
  return {re * area, im * area};
}

ComplexField hg_superposition(const EquatorialSuperposition& sup, const BeamGeometry& geom,
                              const GridSpec& grid) {
  const ComplexField plus = lg_field(ModeIndex(+1, 0), geom, grid);
  if (sup.b() == 0.0) return plus;
  const ComplexField minus = lg_field(ModeIndex(-1, 0), geom, grid);
  const Complex wb = sup.b() * std::polar(1.0, sup.relative_phase());
  std::vector<Complex> samples(plus.samples().size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i] = sup.a() * plus.samples()[i] + wb * minus.samples()[i];
  return ComplexField(plus.size(), plus.pitch(), plus.center_x(), plus.center_y(),
                      std::move(samples));
}

double dark_axis_angle(double phi) { return wrap_axis((phi - kPi) / 2.0); }

}  // namespace oamtomo::modes
