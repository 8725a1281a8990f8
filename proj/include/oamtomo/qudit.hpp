#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "oamtomo/apparatus.hpp"
#include "oamtomo/qubit.hpp"
#include "oamtomo/seed.hpp"

namespace oamtomo::qudit {

using Complex = std::complex<double>;
using Vector4 = Eigen::Vector4cd;
using Matrix4 = Eigen::Matrix4cd;

/// OAM values of the basis states, in amplitude order.
inline constexpr std::array<int, 4> kModes = {-3, -1, +1, +3};

/// Index of an OAM value in kModes; throws for values outside the basis.
int mode_index(int l);

/// Pure state over (|−3⟩, |−1⟩, |+1⟩, |+3⟩), unit norm within 1e-12.
class QuditState {
 public:
  explicit QuditState(const Vector4& amplitudes);

  /// (|+1⟩ + |−1⟩ − |+3⟩ − i|−3⟩)/2.
  static QuditState example_state();
  /// Haar-random pure state.
  static QuditState random(Rng& rng);

  const Vector4& amplitudes() const { return a_; }
  Complex operator[](int i) const { return a_(i); }
  qubit::DensityMatrix density() const;

 private:
  Vector4 a_;
};

/// Projector path of one arm. Leakage keys are OAM values; as in the
/// two-path device they are power couplings relative to `efficiency`.
struct PathConfig {
  double efficiency = 1.0;
  std::map<int, double> leakage;
};

/// Output ports of the combiner tree.
enum class OutPort { AMinus, BMinus, CPlus, CMinus };
const char* to_string(OutPort p);

/// Four-path network. Stage A combines paths (−3, −1) with φ1 on the −1
/// path, stage B combines (+1, +3) with φ2 on the +3 path, stage C combines
/// the A+ and B+ outputs with φ3 on B+. Every combiner maps (u, v) to
/// ((u + v)/√2, (u − v)/√2); the detected outputs are A−, B−, C+ and C−.
struct NetworkConfig {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double phi3 = 0.0;
  std::array<bool, 4> open = {true, true, true, true};
  std::array<PathConfig, 4> paths{};
  double split_transmission = 1.0;  // power reaching each path from the input cascade
  double reference_tap_loss = 0.0;

  /// Lossless, crosstalk-free network with unit split (unitary tree).
  static NetworkConfig lossless();
  /// Two-step beamsplitter cascade: ¼ split, η = 0.64, 25 % reference tap,
  /// every other basis mode suppressed by 27 dB in each path.
  static NetworkConfig three_bs();
  /// Looks up lossless | 3BS.
  static NetworkConfig preset(std::string_view name);

  void validate() const;
};

/// Transfer matrix from input amplitudes to the four output amplitudes
/// (rows ordered as OutPort).
Matrix4 transfer_matrix(const NetworkConfig& cfg);

/// Output probabilities (A−, B−, C+, C−) for a pure input. Throws
/// InvalidArgument if every path is blocked.
std::array<double, 4> network_probabilities(const QuditState& state, const NetworkConfig& cfg);

/// One measurement setting: shutters, phases and the port that is read.
struct ProjectorSetting {
  std::string label;
  std::array<bool, 4> open{};
  double phi1 = 0.0;
  double phi2 = 0.0;
  double phi3 = 0.0;
  OutPort port = OutPort::AMinus;
};

/// Settings and their POVM elements E_k = t_k† t_k on a given device.
struct ProjectorSet {
  std::vector<ProjectorSetting> settings;
  std::vector<Matrix4> povm;

  /// Four single-path populations followed by the six mode pairs at
  /// phases 0 and π/2; pairs not sharing a first-stage combiner are read
  /// at C+ with φ3 as the pair phase.
  static ProjectorSet standard(const NetworkConfig& device);

  NetworkConfig configure(const NetworkConfig& device, std::size_t k) const;
  /// Real 16×16 matrix B with Tr(E_k ρ) = Σ_a B_ka c_a, where
  /// ρ = c_0·𝟙/4 + ½ Σ_a c_a G_a over the Gell-Mann basis.
  Eigen::MatrixXd measurement_matrix() const;
};

/// Rank and conditioning of a projector set.
struct Completeness {
  int rank = 0;
  double condition_number = 0.0;
  bool complete = false;
};

Completeness completeness(const ProjectorSet& set);

struct QuditCount {
  std::string configuration_id;
  OutPort port = OutPort::AMinus;
  double phase = 0.0;  // pair phase of the setting, rad
  std::uint64_t trials = 0;
  std::uint64_t clicks = 0;
  std::uint64_t seed = 0;

  double rate() const { return trials ? static_cast<double>(clicks) / trials : 0.0; }
};

/// Monte Carlo of det.trials pulses per setting; click probability
/// 1 − e^{−μ·QE·Tr(E_k ρ)}·(1 − n̄_bg). Setting k uses child_seed(seed, k).
std::vector<QuditCount> simulate(const qubit::DensityMatrix& rho, const ProjectorSet& set,
                                 const apparatus::DetectionConfig& det, std::uint64_t seed);

/// Inverts the click model: Tr(E_k ρ) ≈ −ln((1 − r)/(1 − n̄_bg))/(μ·QE).
std::vector<double> expectation_estimates(const std::vector<QuditCount>& counts,
                                          const apparatus::DetectionConfig& det);

struct QuditReconstruction {
  qubit::DensityMatrix rho;
  double residual = 0.0;  // RMS of B·c − y
  double condition_number = 0.0;
};

/// Least-squares linear inversion of Tr(E_k ρ) = y_k. The overall scale is
/// fitted along with ρ and removed by normalizing the trace. Throws
/// InvalidArgument for a rank-deficient set or a wrong number of values.
QuditReconstruction reconstruct_qudit(const ProjectorSet& set, const std::vector<double>& y,
                                      bool physical_projection = false);

/// Noiseless expectation values Tr(E_k ρ).
std::vector<double> ideal_expectations(const ProjectorSet& set, const qubit::DensityMatrix& rho);

struct ModeSetCheck {
  bool accepted = true;
  std::string warning;
};

/// Rejects mode sets containing adjacent OAM values (Δl = 1), whose
/// crosstalk suppression is only about 17 dB instead of at least 23 dB.
ModeSetCheck check_mode_set(const std::vector<int>& modes);

struct ExtensionBudget {
  std::string device;
  int dimension = 0;
  double loss = 0.0;              // fraction of input power lost
  double crosstalk_db = 0.0;      // Δl = 2 suppression, lower bound
};

/// Rows of the extension table: Current, 3BS, OAM-sorter.
ExtensionBudget extension_budget(std::string_view preset);
std::vector<ExtensionBudget> extension_budgets();

}  // namespace oamtomo::qudit
