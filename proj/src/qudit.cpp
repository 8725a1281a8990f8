#include "oamtomo/qudit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oamtomo/angles.hpp"
#include "oamtomo/error.hpp"

namespace oamtomo::qudit {

namespace {

constexpr double kNormTol = 1e-12;
constexpr double kRankTol = 1e-10;

const std::vector<qubit::Matrix>& gell_mann4() {
  static const std::vector<qubit::Matrix> basis = qubit::gell_mann_basis(4);
  return basis;
}

void check_fraction(double v, const std::string& what) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument(what + " must lie in [0, 1]");
}

double path_transmission(const PathConfig& path, int target, int input) {
  if (input == target) return std::sqrt(path.efficiency);
  const auto it = path.leakage.find(input);
  return it == path.leakage.end() ? 0.0 : std::sqrt(path.efficiency * it->second);
}

}  // namespace

int mode_index(int l) {
  for (int i = 0; i < 4; ++i)
    if (kModes[i] == l) return i;
  throw InvalidArgument("l=" + std::to_string(l) + " is not a basis mode of the qudit");
}

QuditState::QuditState(const Vector4& amplitudes) : a_(amplitudes) {
  if (std::abs(a_.squaredNorm() - 1.0) > kNormTol)
    throw InvalidArgument("qudit amplitudes must have unit norm");
}

QuditState QuditState::example_state() {
  Vector4 a;
  // order −3, −1, +1, +3
  a << Complex(0.0, -0.5), 0.5, 0.5, -0.5;
  return QuditState(a);
}

QuditState QuditState::random(Rng& rng) {
  Vector4 a;
  for (int i = 0; i < 4; ++i) {
    const double re = rng.normal();
    a(i) = Complex(re, rng.normal());
  }
  return QuditState(a / a.norm());
}

qubit::DensityMatrix QuditState::density() const { return qubit::DensityMatrix::pure(a_); }

const char* to_string(OutPort p) {
  switch (p) {
    case OutPort::AMinus: return "A-";
    case OutPort::BMinus: return "B-";
    case OutPort::CPlus: return "C+";
    default: return "C-";
  }
}

NetworkConfig NetworkConfig::lossless() { return {}; }

NetworkConfig NetworkConfig::three_bs() {
  NetworkConfig c;
  const double eps = db_to_ratio(27.0);
  for (int i = 0; i < 4; ++i) {
    c.paths[i].efficiency = 0.64;
    for (int m : kModes)
      if (m != kModes[i]) c.paths[i].leakage[m] = eps;
  }
  c.split_transmission = 0.25;
  c.reference_tap_loss = 0.25;
  return c;
}

NetworkConfig NetworkConfig::preset(std::string_view name) {
  if (name == "lossless") return lossless();
  if (name == "3BS") return three_bs();
  throw InvalidArgument("unknown network preset '" + std::string(name) + "'");
}

void NetworkConfig::validate() const {
  for (double phi : {phi1, phi2, phi3})
    if (!(phi >= 0.0 && phi < kTwoPi)) throw InvalidArgument("network phases must lie in [0, 2pi)");
  for (int i = 0; i < 4; ++i) {
    check_fraction(paths[i].efficiency, "path efficiency");
    for (const auto& [m, eps] : paths[i].leakage) {
      mode_index(m);
      if (m == kModes[i]) throw InvalidArgument("leakage listed for a path's own mode");
      check_fraction(eps, "path leakage");
    }
  }
  check_fraction(split_transmission, "split transmission");
  check_fraction(reference_tap_loss, "reference tap loss");
}

Matrix4 transfer_matrix(const NetworkConfig& cfg) {
  cfg.validate();
  const double split = std::sqrt(cfg.split_transmission);
  // path amplitudes per input mode
  Matrix4 paths = Matrix4::Zero();
  for (int i = 0; i < 4; ++i) {
    if (!cfg.open[i]) continue;
    for (int m = 0; m < 4; ++m)
      paths(i, m) = split * path_transmission(cfg.paths[i], kModes[i], kModes[m]);
  }
  const double h = std::sqrt(0.5);
  const Complex e1 = std::polar(1.0, cfg.phi1);
  const Complex e2 = std::polar(1.0, cfg.phi2);
  const Complex e3 = std::polar(1.0, cfg.phi3);
  const Eigen::RowVector4cd a_plus = h * (paths.row(0) + e1 * paths.row(1));
  const Eigen::RowVector4cd a_minus = h * (paths.row(0) - e1 * paths.row(1));
  const Eigen::RowVector4cd b_plus = h * (paths.row(2) + e2 * paths.row(3));
  const Eigen::RowVector4cd b_minus = h * (paths.row(2) - e2 * paths.row(3));

  Matrix4 t;
  t.row(0) = a_minus;
  t.row(1) = b_minus;
  t.row(2) = h * (a_plus + e3 * b_plus);
  t.row(3) = h * (a_plus - e3 * b_plus);
  return std::sqrt(1.0 - cfg.reference_tap_loss) * t;
}

std::array<double, 4> network_probabilities(const QuditState& state, const NetworkConfig& cfg) {
  if (std::none_of(cfg.open.begin(), cfg.open.end(), [](bool o) { return o; }))
    throw InvalidArgument("all network paths are blocked");
  cfg.validate();
  // amplitude reaching each combiner input
  std::array<Complex, 4> v{};
  const double split = std::sqrt(cfg.split_transmission);
  for (int i = 0; i < 4; ++i) {
    if (!cfg.open[i]) continue;
    for (int m = 0; m < 4; ++m)
      v[i] += split * path_transmission(cfg.paths[i], kModes[i], kModes[m]) * state[m];
  }
  // two-beam intensities ½(|u|² + |w|² ± 2Re(u*·e^{iφ}·w)); a blocked input
  // contributes an exact zero, so a lone path never sees the phases
  auto combine = [](Complex u, Complex w, double phi, double sign) {
    return 0.5 * (std::norm(u) + std::norm(w) +
                  sign * 2.0 * (std::conj(u) * std::polar(1.0, phi) * w).real());
  };
  const double h = std::sqrt(0.5);
  const Complex a_plus = h * (v[0] + std::polar(1.0, cfg.phi1) * v[1]);
  const Complex b_plus = h * (v[2] + std::polar(1.0, cfg.phi2) * v[3]);
  const double ia = combine(v[0], v[1], cfg.phi1, +1.0);
  const double ib = combine(v[2], v[3], cfg.phi2, +1.0);
  const double cross = 2.0 * (std::conj(a_plus) * std::polar(1.0, cfg.phi3) * b_plus).real();
  const double tap = 1.0 - cfg.reference_tap_loss;
  return {tap * combine(v[0], v[1], cfg.phi1, -1.0), tap * combine(v[2], v[3], cfg.phi2, -1.0),
          tap * 0.5 * (ia + ib + cross), tap * 0.5 * (ia + ib - cross)};
}

ProjectorSet ProjectorSet::standard(const NetworkConfig& device) {
  ProjectorSet set;
  for (int i = 0; i < 4; ++i) {
    ProjectorSetting s;
    s.label = "pop" + std::to_string(kModes[i]);
    s.open[i] = true;
    s.port = i < 2 ? OutPort::AMinus : OutPort::BMinus;
    set.settings.push_back(s);
  }
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (double phase : {0.0, kPi / 2.0}) {
        ProjectorSetting s;
        s.label = "pair" + std::to_string(kModes[i]) + "," + std::to_string(kModes[j]) + "@" +
                  std::to_string(static_cast<int>(std::lround(rad_to_deg(phase))));
        s.open[i] = true;
        s.open[j] = true;
        if (i == 0 && j == 1) {
          s.phi1 = phase;
          s.port = OutPort::AMinus;
        } else if (i == 2 && j == 3) {
          s.phi2 = phase;
          s.port = OutPort::BMinus;
        } else {
          s.phi3 = phase;
          s.port = OutPort::CPlus;
        }
        set.settings.push_back(s);
      }
  for (std::size_t k = 0; k < set.settings.size(); ++k) {
    const Matrix4 t = transfer_matrix(set.configure(device, k));
    const Eigen::RowVector4cd row = t.row(static_cast<int>(set.settings[k].port));
    set.povm.push_back(row.adjoint() * row);
  }
  return set;
}

NetworkConfig ProjectorSet::configure(const NetworkConfig& device, std::size_t k) const {
  const ProjectorSetting& s = settings.at(k);
  NetworkConfig c = device;
  c.open = s.open;
  c.phi1 = s.phi1;
  c.phi2 = s.phi2;
  c.phi3 = s.phi3;
  return c;
}

Eigen::MatrixXd ProjectorSet::measurement_matrix() const {
  const auto& g = gell_mann4();
  Eigen::MatrixXd b(povm.size(), 16);
  for (std::size_t k = 0; k < povm.size(); ++k) {
    b(k, 0) = povm[k].trace().real() / 4.0;
    for (int a = 0; a < 15; ++a) b(k, a + 1) = 0.5 * (povm[k] * g[a]).trace().real();
  }
  return b;
}

Completeness completeness(const ProjectorSet& set) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(set.measurement_matrix());
  const Eigen::VectorXd sv = svd.singularValues();
  Completeness c;
  const double smax = sv.size() ? sv(0) : 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > kRankTol * smax) ++c.rank;
  c.complete = c.rank == 16;
  c.condition_number = c.complete ? smax / sv(sv.size() - 1)
                                  : std::numeric_limits<double>::infinity();
  return c;
}

std::vector<QuditCount> simulate(const qubit::DensityMatrix& rho, const ProjectorSet& set,
                                 const apparatus::DetectionConfig& det, std::uint64_t seed) {
  det.validate();
  if (rho.dim() != 4) throw InvalidArgument("qudit simulation needs a 4-dimensional state");
  const auto y = ideal_expectations(set, rho);
  std::vector<QuditCount> counts;
  for (std::size_t k = 0; k < set.settings.size(); ++k) {
    const auto& s = set.settings[k];
    QuditCount c;
    c.configuration_id = s.label;
    c.port = s.port;
    c.phase = s.phi1 + s.phi2 + s.phi3;
    c.trials = det.trials;
    c.seed = child_seed(seed, k);
    const double mu = det.mean_photons * det.detector_efficiency * std::max(y[k], 0.0);
    const double p = 1.0 - std::exp(-mu) * (1.0 - det.background);
    Rng rng(c.seed);
    for (std::uint64_t t = 0; t < det.trials; ++t) c.clicks += rng.bernoulli(p);
    counts.push_back(c);
  }
  return counts;
}

std::vector<double> expectation_estimates(const std::vector<QuditCount>& counts,
                                          const apparatus::DetectionConfig& det) {
  const double scale = det.mean_photons * det.detector_efficiency;
  if (!(scale > 0.0)) throw InvalidArgument("mean photon number and efficiency must be positive");
  std::vector<double> y;
  for (const auto& c : counts) {
    if (c.trials == 0) throw DataError("setting '" + c.configuration_id + "' has no trials");
    // a saturated detector gives no information beyond a lower bound
    const double r = std::min(c.rate(), 1.0 - 0.5 / static_cast<double>(c.trials));
    y.push_back(-std::log((1.0 - r) / (1.0 - det.background)) / scale);
  }
  return y;
}

std::vector<double> ideal_expectations(const ProjectorSet& set, const qubit::DensityMatrix& rho) {
  std::vector<double> y;
  for (const auto& e : set.povm) y.push_back((e * rho.matrix()).trace().real());
  return y;
}

QuditReconstruction reconstruct_qudit(const ProjectorSet& set, const std::vector<double>& y,
                                      bool physical_projection) {
  if (y.size() != set.povm.size())
    throw InvalidArgument("expected " + std::to_string(set.povm.size()) +
                          " expectation values, got " + std::to_string(y.size()));
  const Completeness c = completeness(set);
  if (!c.complete)
    throw InvalidArgument("projector set is rank deficient (rank " + std::to_string(c.rank) +
                          " < 16)");
  const Eigen::MatrixXd b = set.measurement_matrix();
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
  const Eigen::VectorXd coef = b.colPivHouseholderQr().solve(yv);
  if (!(coef(0) > 0.0)) throw DataError("reconstructed state has non-positive trace");

  const auto& g = gell_mann4();
  qubit::Matrix m = qubit::Matrix::Identity(4, 4) / 4.0;
  for (int a = 0; a < 15; ++a) m += 0.5 * (coef(a + 1) / coef(0)) * g[a];

  qubit::DensityMatrix rho(m);
  if (physical_projection) rho = qubit::project_physical(rho);
  const double rms = std::sqrt((b * coef - yv).squaredNorm() / static_cast<double>(y.size()));
  return QuditReconstruction{std::move(rho), rms, c.condition_number};
}

ModeSetCheck check_mode_set(const std::vector<int>& modes) {
  std::vector<int> sorted = modes;
  std::sort(sorted.begin(), sorted.end());
  ModeSetCheck check;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] == sorted[i - 1]) {
      check.accepted = false;
      check.warning = "mode l=" + std::to_string(sorted[i]) + " is listed twice";
      return check;
    }
    if (sorted[i] - sorted[i - 1] == 1) {
      check.accepted = false;
      check.warning = "modes l=" + std::to_string(sorted[i - 1]) + " and l=" +
                      std::to_string(sorted[i]) +
                      " differ by one unit; adjacent-l crosstalk is suppressed by only about "
                      "17 dB, use a spacing of 2";
      return check;
    }
  }
  return check;
}

ExtensionBudget extension_budget(std::string_view preset) {
  for (const auto& b : extension_budgets())
    if (b.device == preset) return b;
  throw InvalidArgument("unknown extension preset '" + std::string(preset) +
                        "' (expected Current, 3BS or OAM-sorter)");
}

std::vector<ExtensionBudget> extension_budgets() {
  return {{"Current", 2, 0.75, 27.0}, {"3BS", 4, 0.88, 27.0}, {"OAM-sorter", 15, 0.40, 30.0}};
}

}  // namespace oamtomo::qudit
