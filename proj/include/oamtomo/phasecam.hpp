#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "oamtomo/angles.hpp"

namespace oamtomo::phasecam {

/// Floating-point grayscale image, row-major, row 0 at the top.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int col, int row) { return pixels[static_cast<std::size_t>(row) * width + col]; }
  double at(int col, int row) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
};

/// Camera frame of the back-propagated reference beam.
class PhaseFrame {
 public:
  PhaseFrame(int width, int height, int bit_depth, std::vector<std::uint16_t> pixels,
             double exposure = 0.1, std::optional<double> phi_true = std::nullopt);

  int width() const { return width_; }
  int height() const { return height_; }
  int bit_depth() const { return bit_depth_; }
  int max_value() const { return (1 << bit_depth_) - 1; }
  double exposure() const { return exposure_; }
  std::optional<double> phi_true() const { return phi_true_; }

  std::uint16_t at(int col, int row) const {
    return pixels_[static_cast<std::size_t>(row) * width_ + col];
  }
  std::span<const std::uint16_t> pixels() const { return pixels_; }

  GrayImage to_gray() const;
  /// Rounds and clamps to the bit depth.
  static PhaseFrame from_gray(const GrayImage& img, int bit_depth, double exposure = 0.1,
                              std::optional<double> phi_true = std::nullopt);

  friend bool operator==(const PhaseFrame&, const PhaseFrame&) = default;

 private:
  int width_;
  int height_;
  int bit_depth_;
  std::vector<std::uint16_t> pixels_;
  double exposure_;
  std::optional<double> phi_true_;
};

/// Camera and beam geometry. Pixel (col, row) has its centre at
/// (col + ½, row + ½); the beam centre is given in the same coordinates.
struct FrameGeometry {
  int width = 330;
  int height = 330;
  double center_x = 165.0;
  double center_y = 165.0;
  double waist_px = 60.0;
  double pixel_pitch = 5.5e-6;  // m
  double wavelength = 852e-9;   // m
  int bit_depth = 8;
  double exposure = 0.1;        // s
};

/// Misalignments of the LG^{−1} component relative to LG^{+1}.
struct Defects {
  double offset = 0.0;        // lateral shift, fraction of the waist
  double offset_angle = 0.0;  // direction of the shift, rad
  double tilt = 0.0;          // angle between the beams, rad
  double tilt_angle = 0.0;    // azimuth of the tilt, rad
  double lobe_imbalance = 1.0;  // intensity factor on one side of the dark axis
};

struct Noise {
  double peak_counts = 200.0;   // ideal lobe maximum, in gray levels
  double background = 0.0;      // uniform offset, fraction of peak_counts
  bool shot_noise = false;
  double photons_per_count = 1.0;
};

/// Renders |LG^{+1} + e^{iφ}·LG^{−1}|² for a fixed geometry. The two fields are
/// computed once; rendering a new phase only recombines them.
class FrameSynthesizer {
 public:
  /// Throws InvalidArgument if the frame is smaller than 64×64, the
  /// offset exceeds half a waist, or twice the waist does not fit the image.
  FrameSynthesizer(const FrameGeometry& geom, const Defects& defects = {},
                   const Noise& noise = {});

  PhaseFrame render(double phi, std::uint64_t seed = 0) const;
  const FrameGeometry& geometry() const { return geom_; }

 private:
  FrameGeometry geom_;
  Defects defects_;
  Noise noise_;
  double peak_;
  std::vector<std::complex<double>> plus_;
  std::vector<std::complex<double>> minus_;
};

PhaseFrame synthesize_frame(double phi, const Defects& defects, const Noise& noise,
                            const FrameGeometry& geom, std::uint64_t seed = 0);

/// 3×3 median (edge pixels replicated) followed by the midtone stretch:
/// t = clamp((v − p1)/(p99 − p1)), out = 3t² − 2t³. A flat image comes back
/// unchanged. The GrayImage overload returns values in [0, 1].
PhaseFrame enhance(const PhaseFrame& frame);
GrayImage enhance(const GrayImage& img);

GrayImage average(std::span<const PhaseFrame> frames);

struct RingFit {
  double center_x = 0.0;  // pixel coordinates, see FrameGeometry
  double center_y = 0.0;
  double width = 0.0;     // fitted w of A·(r/w)²·e^{−2r²/w²} + B
  double radius_of_interest = 0.0;
  double residual = 0.0;  // RMS of the fit residuals
};

/// First- and second-order intensity moments: centroid and w = sqrt(σx² + σy²).
RingFit moment_estimate(const GrayImage& img);

struct RingFitOptions {
  bool enhance = true;
  double roi_factor = 2.0;
  int max_iterations = 200;
};

/// Levenberg-Marquardt fit of the doughnut model to an averaged image,
/// started from the moment estimate.
RingFit fit_ring(const GrayImage& averaged, const RingFitOptions& opts = {});
RingFit fit_ring(std::span<const PhaseFrame> frames, const RingFitOptions& opts = {});

struct BinProfile {
  int bins = 0;
  std::vector<double> raw;         // I(α_k), k ∈ [0, N)
  std::vector<double> folded;      // I(k) + I(k + N/2)
  std::vector<double> subtracted;  // folded(k) − folded(k + N/4)
  std::vector<double> processed;   // 45°-sector average of `subtracted`
};

struct PhaseEstimate {
  double alpha_d = 0.0;  // [0, π)
  double phi = 0.0;      // [0, 2π)
  int min_bin = 0;
  double residual = 0.0;  // processed minimum over the mean folded intensity
  BinProfile profile;
};

/// Dark-axis analysis bound to one ring fit. Pixel-to-bin assignment is
/// computed once; the analyzer is immutable and can be shared.
class PhaseAnalyzer {
 public:
  PhaseAnalyzer(const RingFit& ring, int width, int height, int bins = 120);

  PhaseEstimate analyze(const GrayImage& img) const;
  PhaseEstimate analyze(const PhaseFrame& frame) const { return analyze(frame.to_gray()); }

 private:
  PhaseBins bins_;
  int width_;
  int height_;
  struct Share {
    std::size_t pixel;
    int bin;
    double weight;
  };
  std::vector<Share> shares_;   // pixel area falling into each bin
  std::vector<double> weight_;  // total area per bin
};

PhaseEstimate extract_phase(const PhaseFrame& frame, const RingFit& ring, int bins = 120);

/// Quarter turn counter-clockwise as displayed (square frames only).
PhaseFrame rotate90(const PhaseFrame& frame);
RingFit rotate90(const RingFit& ring, int width, int height);

}  // namespace oamtomo::phasecam
