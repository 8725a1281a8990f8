#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace oamtomo::modes {

using Complex = std::complex<double>;

/// Azimuthal (OAM) and radial indices of a Laguerre-Gaussian mode.
struct ModeIndex {
  int l = 0;
  int p = 0;

  ModeIndex() = default;
  ModeIndex(int l_, int p_);

  /// Optical order |l| + 2p.
  int order() const;

  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

/// Gaussian beam parameters at a given axial position.
class BeamGeometry {
 public:
  BeamGeometry(double waist, double wavelength, double z = 0.0);

  double waist() const { return w0_; }
  double wavelength() const { return wavelength_; }
  double z() const { return z_; }

  double rayleigh_length() const;
  double radius() const;            // w(z)
  double curvature_radius() const;  // R(z), infinite at the waist
  double gouy_phase() const;        // ζ(z)
  double wavenumber() const;

  BeamGeometry at(double z) const { return BeamGeometry(w0_, wavelength_, z); }

 private:
  double w0_;
  double wavelength_;
  double z_;
};

/// Square sampling grid. Sample (ix, iy) sits at the centre of its cell:
/// x = center_x - half_width + (ix + 1/2) * pitch, likewise for y (y up).
struct GridSpec {
  std::size_t n = 256;
  double half_width = 0.0;
  double center_x = 0.0;
  double center_y = 0.0;

  double pitch() const { return 2.0 * half_width / static_cast<double>(n); }
};

/// Grid with N=256 wide enough for every mode up to the given optical order:
/// half-width 4·w(z)·sqrt(order + 1).
GridSpec reference_grid(const BeamGeometry& geom, int max_order);

/// Sampled complex transverse field. Immutable once built.
class ComplexField {
 public:
  ComplexField(std::size_t n, double pitch, double center_x, double center_y,
               std::vector<Complex> samples);

  std::size_t size() const { return n_; }
  double pitch() const { return pitch_; }
  double center_x() const { return cx_; }
  double center_y() const { return cy_; }

  const Complex& operator()(std::size_t ix, std::size_t iy) const {
    return samples_[iy * n_ + ix];
  }
  std::span<const Complex> samples() const { return samples_; }

  double x(std::size_t ix) const;
  double y(std::size_t iy) const;

  /// Σ|u|²·pitch² (midpoint rule).
  double norm_squared() const;

  /// |u|² row-major, iy = 0 is the bottom row.
  std::vector<double> intensity() const;

  bool same_grid(const ComplexField& other) const;

 private:
  std::size_t n_;
  double pitch_;
  double cx_;
  double cy_;
  std::vector<Complex> samples_;
};

/// Equal-or-unequal weight superposition a·|+1⟩ + b·e^{iφ}·|−1⟩.
class EquatorialSuperposition {
 public:
  /// φ is reduced to [0, 2π); a, b must be non-negative with a² + b² = 1.
  EquatorialSuperposition(double relative_phase, double a, double b);

  /// Equal-weight superposition with the given relative phase.
  static EquatorialSuperposition equal(double relative_phase);

  double relative_phase() const { return phi_; }
  double a() const { return a_; }
  double b() const { return b_; }

 private:
  double phi_;
  double a_;
  double b_;
};

/// LG amplitude at transverse position (x, y) relative to the beam axis.
/// The Laguerre argument is 2r²/w(z)².
Complex lg_amplitude(const ModeIndex& mode, const BeamGeometry& geom, double x, double y);

/// Samples LG^l_p on the grid, beam axis at the physical origin.
/// Throws GridTooSmall if the grid edge is closer than 4·w(z)·sqrt(|l|+2p+1)
/// to the beam axis.
ComplexField lg_field(const ModeIndex& mode, const BeamGeometry& geom, const GridSpec& grid);

/// ⟨f|g⟩ = Σ conj(f)·g·pitch². Throws GridMismatch for different grids.
Complex overlap(const ComplexField& f, const ComplexField& g);

/// a·LG^{+1}_0 + b·e^{iφ}·LG^{−1}_0.
ComplexField hg_superposition(const EquatorialSuperposition& sup, const BeamGeometry& geom,
                              const GridSpec& grid);

/// Dark-line angle of an equal-weight superposition, (φ − π)/2 reduced to [0, π).
double dark_axis_angle(double phi);

}  // namespace oamtomo::modes
