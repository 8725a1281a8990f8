#pragma once

#include <numbers>

namespace oamtomo {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Reduce a phase to [0, 2π).
double wrap_phase(double phi);

/// Reduce a mode-plane axis angle to [0, π).
double wrap_axis(double alpha);

/// Reduce an angle difference to (−π, π].
double wrap_signed(double delta);

/// Power ratio for a rejection quoted in dB (25 dB → 10^-2.5).
double db_to_ratio(double db);

}  // namespace oamtomo

namespace oamtomo {

/// Angular bins of the dark-axis analysis. Bin k of N is centred on
/// α_k = 2πk/N; after folding, dark-axis bins run over k ∈ [0, N/2) and
/// bin k corresponds to the interferometer phase φ_k = 2α_k + π.
struct PhaseBins {
  int n = 120;

  explicit PhaseBins(int bins = 120);

  double bin_width() const { return kTwoPi / n; }
  int folded() const { return n / 2; }

  /// Full-circle bin of a direction angle in [0, 2π).
  int direction_bin(double angle) const;
  /// Folded bin of a dark-axis angle.
  int axis_bin(double alpha) const;
  /// Folded bin that an interferometer phase maps to.
  int phase_bin(double phi) const;

  double axis_angle(int k) const { return bin_width() * k; }
  double phase_of(int k) const;
};

}  // namespace oamtomo
