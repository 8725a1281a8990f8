#include "oamtomo/phasecam.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "oamtomo/error.hpp"
#include "oamtomo/modes.hpp"
#include "oamtomo/seed.hpp"

namespace oamtomo::phasecam {

namespace {

// pixels are split into kSubsamples² parts for the angular bin areas
constexpr int kSubsamples = 16;

std::uint64_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  if (mean > 500.0) {
    const double v = std::round(mean + std::sqrt(mean) * rng.normal());
    return v < 0.0 ? 0 : static_cast<std::uint64_t>(v);
  }
  // inversion by sequential search
  double p = std::exp(-mean);
  double cdf = p;
  const double u = rng.uniform();
  std::uint64_t k = 0;
  while (u > cdf && p > 0.0) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

double percentile(std::vector<double> v, double q) {
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
  return v[idx];
}

GrayImage median3x3(const GrayImage& img) {
  GrayImage out(img.width, img.height);
  double win[9];
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      int n = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = std::clamp(r + dr, 0, img.height - 1);
          const int cc = std::clamp(c + dc, 0, img.width - 1);
          win[n++] = img.at(cc, rr);
        }
      std::nth_element(win, win + 4, win + 9);
      out.at(c, r) = win[4];
    }
  return out;
}

// Returns the stretched image in [0, 1], or nothing for a flat image.
std::optional<GrayImage> midtone_stretch(const GrayImage& img) {
  const double lo = percentile(img.pixels, 0.01);
  const double hi = percentile(img.pixels, 0.99);
  if (!(hi > lo)) return std::nullopt;
  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double t = std::clamp((img.pixels[i] - lo) / (hi - lo), 0.0, 1.0);
    out.pixels[i] = t * t * (3.0 - 2.0 * t);
  }
  return out;
}

struct DisplayPoint {
  double x;
  double y;
};

// Pixel centre relative to (cx, cy), y pointing up.
DisplayPoint display(int col, int row, double cx, double cy) {
  return {col + 0.5 - cx, cy - (row + 0.5)};
}

}  // namespace

PhaseFrame::PhaseFrame(int width, int height, int bit_depth, std::vector<std::uint16_t> pixels,
                       double exposure, std::optional<double> phi_true)
    : width_(width),
      height_(height),
      bit_depth_(bit_depth),
      pixels_(std::move(pixels)),
      exposure_(exposure),
      phi_true_(phi_true) {
  if (width < 64 || height < 64) throw InvalidArgument("frames must be at least 64x64 pixels");
  if (bit_depth != 8 && bit_depth != 16) throw InvalidArgument("bit depth must be 8 or 16");
  if (pixels_.size() != static_cast<std::size_t>(width) * height)
    throw InvalidArgument("pixel count does not match frame size");
  const int maxv = max_value();
  for (auto v : pixels_)
    if (v > maxv) throw InvalidArgument("pixel value exceeds bit depth");
}

GrayImage PhaseFrame::to_gray() const {
  GrayImage g(width_, height_);
  for (std::size_t i = 0; i < pixels_.size(); ++i) g.pixels[i] = pixels_[i];
  return g;
}

PhaseFrame PhaseFrame::from_gray(const GrayImage& img, int bit_depth, double exposure,
                                 std::optional<double> phi_true) {
  const double maxv = (1 << bit_depth) - 1;
  std::vector<std::uint16_t> px(img.pixels.size());
  for (std::size_t i = 0; i < px.size(); ++i)
    px[i] = static_cast<std::uint16_t>(std::clamp(std::round(img.pixels[i]), 0.0, maxv));
  return PhaseFrame(img.width, img.height, bit_depth, std::move(px), exposure, phi_true);
}

FrameSynthesizer::FrameSynthesizer(const FrameGeometry& geom, const Defects& defects,
                                   const Noise& noise)
    : geom_(geom), defects_(defects), noise_(noise) {
  if (geom.width < 64 || geom.height < 64)
    throw InvalidArgument("frames must be at least 64x64 pixels");
  if (!(geom.waist_px > 0.0)) throw InvalidArgument("beam waist must be positive");
  if (defects.offset < 0.0 || defects.offset > 0.5)
    throw InvalidArgument("offset defect must lie in [0, 0.5] waists");
  if (!(defects.lobe_imbalance > 0.0)) throw InvalidArgument("lobe imbalance must be positive");
  const double reach = geom.waist_px * (2.0 + defects.offset);
  if (geom.center_x - reach < 0.0 || geom.center_x + reach > geom.width ||
      geom.center_y - reach < 0.0 || geom.center_y + reach > geom.height)
    throw InvalidArgument("beam of waist " + std::to_string(geom.waist_px) +
                          " px does not fit the " + std::to_string(geom.width) + "x" +
                          std::to_string(geom.height) + " frame");

  const modes::BeamGeometry beam(geom.waist_px * geom.pixel_pitch, geom.wavelength);
  const double w = beam.radius();
  // ideal lobe maximum of |LG+1 + LG-1|²: 4·max|LG1|² = 8/(π w² e)
  peak_ = 8.0 / (kPi * w * w * std::exp(1.0));

  const double ox = defects.offset * w * std::cos(defects.offset_angle);
  const double oy = defects.offset * w * std::sin(defects.offset_angle);
  const double kt = beam.wavenumber() * std::sin(defects.tilt);
  const double tx = kt * std::cos(defects.tilt_angle);
  const double ty = kt * std::sin(defects.tilt_angle);

  const std::size_t n = static_cast<std::size_t>(geom.width) * geom.height;
  plus_.resize(n);
  minus_.resize(n);
  for (int r = 0; r < geom.height; ++r)
    for (int c = 0; c < geom.width; ++c) {
      const auto p = display(c, r, geom.center_x, geom.center_y);
      const double x = p.x * geom.pixel_pitch;
      const double y = p.y * geom.pixel_pitch;
      const std::size_t i = static_cast<std::size_t>(r) * geom.width + c;
      plus_[i] = modes::lg_amplitude(modes::ModeIndex(+1, 0), beam, x, y);
      minus_[i] = modes::lg_amplitude(modes::ModeIndex(-1, 0), beam, x - ox, y - oy) *
                  std::polar(1.0, tx * x + ty * y);
    }
}

PhaseFrame FrameSynthesizer::render(double phi, std::uint64_t seed) const {
  const std::complex<double> rot = std::polar(1.0, phi);
  const double alpha = modes::dark_axis_angle(phi);
  const double nx = -std::sin(alpha);
  const double ny = std::cos(alpha);
  Rng rng(seed);

  GrayImage img(geom_.width, geom_.height);
  for (int r = 0; r < geom_.height; ++r)
    for (int c = 0; c < geom_.width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * geom_.width + c;
      double v = noise_.peak_counts * std::norm(plus_[i] + rot * minus_[i]) / peak_;
      if (defects_.lobe_imbalance != 1.0) {
        const auto p = display(c, r, geom_.center_x, geom_.center_y);
        if (p.x * nx + p.y * ny > 0.0) v *= defects_.lobe_imbalance;
      }
      v += noise_.background * noise_.peak_counts;
      if (noise_.shot_noise)
        v = static_cast<double>(poisson(rng, v * noise_.photons_per_count)) /
            noise_.photons_per_count;
      img.pixels[i] = v;
    }
  return PhaseFrame::from_gray(img, geom_.bit_depth, geom_.exposure, wrap_phase(phi));
}

PhaseFrame synthesize_frame(double phi, const Defects& defects, const Noise& noise,
                            const FrameGeometry& geom, std::uint64_t seed) {
  return FrameSynthesizer(geom, defects, noise).render(phi, seed);
}

GrayImage enhance(const GrayImage& img) {
  GrayImage med = median3x3(img);
  auto stretched = midtone_stretch(med);
  return stretched ? std::move(*stretched) : med;
}

PhaseFrame enhance(const PhaseFrame& frame) {
  const GrayImage med = median3x3(frame.to_gray());
  auto stretched = midtone_stretch(med);
  if (!stretched)
    return PhaseFrame::from_gray(med, frame.bit_depth(), frame.exposure(), frame.phi_true());
  for (auto& v : stretched->pixels) v *= frame.max_value();
  return PhaseFrame::from_gray(*stretched, frame.bit_depth(), frame.exposure(), frame.phi_true());
}

GrayImage average(std::span<const PhaseFrame> frames) {
  if (frames.empty()) throw InvalidArgument("cannot average an empty frame stack");
  GrayImage avg(frames[0].width(), frames[0].height());
  for (const auto& f : frames) {
    if (f.width() != avg.width || f.height() != avg.height)
      throw InvalidArgument("frames in a stack must share dimensions");
    for (std::size_t i = 0; i < avg.pixels.size(); ++i) avg.pixels[i] += f.pixels()[i];
  }
  for (auto& v : avg.pixels) v /= static_cast<double>(frames.size());
  return avg;
}

RingFit moment_estimate(const GrayImage& img) {
  double s = 0.0, sx = 0.0, sy = 0.0;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const double v = img.at(c, r);
      s += v;
      sx += v * (c + 0.5);
      sy += v * (r + 0.5);
    }
  if (!(s > 0.0)) throw FitError("image carries no intensity");
  RingFit est;
  est.center_x = sx / s;
  est.center_y = sy / s;
  double sxx = 0.0, syy = 0.0;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const double v = img.at(c, r);
      const double dx = c + 0.5 - est.center_x;
      const double dy = r + 0.5 - est.center_y;
      sxx += v * dx * dx;
      syy += v * dy * dy;
    }
  // for (r/w)²·e^{−2r²/w²} the mean of r² equals w²
  est.width = std::sqrt((sxx + syy) / s);
  return est;
}

RingFit fit_ring(const GrayImage& averaged, const RingFitOptions& opts) {
  const GrayImage img = opts.enhance ? enhance(averaged) : averaged;
  const RingFit start = moment_estimate(img);

  double peak = img.pixels.empty() ? 0.0 : img.pixels[0];
  double floor_level = peak;
  for (double v : img.pixels) {
    peak = std::max(peak, v);
    floor_level = std::min(floor_level, v);
  }
  if (!(peak > floor_level)) throw FitError("averaged image is flat");

  // parameters: cx, cy, A, w, B
  Eigen::Matrix<double, 5, 1> p;
  p << start.center_x, start.center_y, 2.0 * std::exp(1.0) * (peak - floor_level), start.width,
      floor_level;

  auto evaluate = [&](const Eigen::Matrix<double, 5, 1>& q, Eigen::Matrix<double, 5, 5>* jtj,
                      Eigen::Matrix<double, 5, 1>* jtr) {
    double cost = 0.0;
    if (jtj) jtj->setZero();
    if (jtr) jtr->setZero();
    const double w2 = q(3) * q(3);
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c) {
        const double dx = c + 0.5 - q(0);
        const double dy = r + 0.5 - q(1);
        const double u = (dx * dx + dy * dy) / w2;
        const double e = std::exp(-2.0 * u);
        const double model = q(2) * u * e + q(4);
        const double res = img.at(c, r) - model;
        cost += res * res;
        if (jtj) {
          const double g = q(2) * e * (1.0 - 2.0 * u);  // ∂model/∂u
          Eigen::Matrix<double, 5, 1> jac;
          jac << g * 2.0 * dx / w2, g * 2.0 * dy / w2, u * e, g * (-2.0 * u / q(3)), 1.0;
          jtj->noalias() += jac * jac.transpose();
          jtr->noalias() += jac * res;
        }
      }
    return cost;
  };

  Eigen::Matrix<double, 5, 5> jtj;
  Eigen::Matrix<double, 5, 1> jtr;
  double cost = evaluate(p, &jtj, &jtr);
  double lambda = 1e-3;
  bool converged = false;
  for (int it = 0; it < opts.max_iterations && !converged; ++it) {
    Eigen::Matrix<double, 5, 5> a = jtj;
    a.diagonal() += lambda * jtj.diagonal();
    const Eigen::Matrix<double, 5, 1> step = a.ldlt().solve(jtr);
    const Eigen::Matrix<double, 5, 1> trial = p + step;
    if (!(trial(3) > 0.0) || !step.allFinite()) {
      lambda *= 10.0;
      continue;
    }
    const double trial_cost = evaluate(trial, nullptr, nullptr);
    if (trial_cost < cost) {
      const double gain = cost - trial_cost;
      p = trial;
      cost = evaluate(p, &jtj, &jtr);
      lambda = std::max(lambda / 10.0, 1e-12);
      converged = gain <= 1e-14 * cost || step.head<2>().norm() < 1e-9;
    } else {
      lambda *= 10.0;
      converged = lambda > 1e12;
    }
  }
  if (!converged) throw FitError("ring fit did not converge");

  RingFit fit;
  fit.center_x = p(0);
  fit.center_y = p(1);
  fit.width = std::abs(p(3));
  fit.radius_of_interest = opts.roi_factor * fit.width;
  fit.residual = std::sqrt(cost / static_cast<double>(img.pixels.size()));
  if (fit.center_x < 0.0 || fit.center_x > img.width || fit.center_y < 0.0 ||
      fit.center_y > img.height)
    throw FitError("fitted ring centre lies outside the image");
  return fit;
}

RingFit fit_ring(std::span<const PhaseFrame> frames, const RingFitOptions& opts) {
  return fit_ring(average(frames), opts);
}

PhaseAnalyzer::PhaseAnalyzer(const RingFit& ring, int width, int height, int bins)
    : bins_(bins), width_(width), height_(height) {
  if (!(ring.radius_of_interest > 0.0)) throw InvalidArgument("radius of interest must be positive");
  weight_.assign(bins_.n, 0.0);
  const double roi2 = ring.radius_of_interest * ring.radius_of_interest;
  const int sub = kSubsamples;
  std::vector<double> part(bins_.n);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      std::fill(part.begin(), part.end(), 0.0);
      bool any = false;
      for (int sy = 0; sy < sub; ++sy)
        for (int sx = 0; sx < sub; ++sx) {
          const double x = c + (sx + 0.5) / sub - ring.center_x;
          const double y = ring.center_y - (r + (sy + 0.5) / sub);
          if (x * x + y * y > roi2) continue;
          part[bins_.direction_bin(std::atan2(y, x))] += 1.0 / (sub * sub);
          any = true;
        }
      if (!any) continue;
      for (int k = 0; k < bins_.n; ++k)
        if (part[k] > 0.0) {
          shares_.push_back({static_cast<std::size_t>(r) * width + c, k, part[k]});
          weight_[k] += part[k];
        }
    }
}

PhaseEstimate PhaseAnalyzer::analyze(const GrayImage& img) const {
  if (img.width != width_ || img.height != height_)
    throw InvalidArgument("frame size differs from the analyzer geometry");
  const int n = bins_.n;
  const int half = n / 2;
  const int quarter = n / 4;
  const int window = n / 16;

  PhaseEstimate est;
  BinProfile& prof = est.profile;
  prof.bins = n;
  prof.raw.assign(n, 0.0);
  for (const Share& sh : shares_) prof.raw[sh.bin] += sh.weight * img.pixels[sh.pixel];
  for (int k = 0; k < n; ++k) {
    if (weight_[k] == 0.0)
      throw DataError("angular bin " + std::to_string(k) + " holds no pixels");
    prof.raw[k] /= weight_[k];
  }

  prof.folded.resize(half);
  for (int k = 0; k < half; ++k) prof.folded[k] = prof.raw[k] + prof.raw[k + half];
  prof.subtracted.resize(half);
  for (int k = 0; k < half; ++k)
    prof.subtracted[k] = prof.folded[k] - prof.folded[(k + quarter) % half];
  prof.processed.resize(half);
  for (int k = 0; k < half; ++k) {
    double s = 0.0;
    for (int j = -window; j <= window; ++j) s += prof.subtracted[((k + j) % half + half) % half];
    prof.processed[k] = s / (2 * window + 1);
  }

  // strict comparison: the lowest index wins ties
  int kmin = 0;
  for (int k = 1; k < half; ++k)
    if (prof.processed[k] < prof.processed[kmin]) kmin = k;

  double mean_folded = 0.0;
  for (double v : prof.folded) mean_folded += v;
  mean_folded /= half;

  est.min_bin = kmin;
  est.alpha_d = bins_.axis_angle(kmin);
  est.phi = bins_.phase_of(kmin);
  est.residual = mean_folded != 0.0 ? prof.processed[kmin] / mean_folded : 0.0;
  return est;
}

PhaseEstimate extract_phase(const PhaseFrame& frame, const RingFit& ring, int bins) {
  return PhaseAnalyzer(ring, frame.width(), frame.height(), bins).analyze(frame);
}

PhaseFrame rotate90(const PhaseFrame& frame) {
  const int n = frame.width();
  if (frame.height() != n) throw InvalidArgument("rotate90 needs a square frame");
  std::vector<std::uint16_t> px(frame.pixels().size());
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      px[static_cast<std::size_t>(r) * n + c] = frame.at(n - 1 - r, c);
  std::optional<double> truth;
  if (frame.phi_true()) truth = wrap_phase(*frame.phi_true() + kPi);
  return PhaseFrame(n, n, frame.bit_depth(), std::move(px), frame.exposure(), truth);
}

RingFit rotate90(const RingFit& ring, int width, int height) {
  if (width != height) throw InvalidArgument("rotate90 needs a square frame");
  RingFit out = ring;
  out.center_x = ring.center_y;
  out.center_y = width - ring.center_x;
  return out;
}

}  // namespace oamtomo::phasecam
