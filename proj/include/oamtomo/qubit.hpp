#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace oamtomo::qubit {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Stokes vector (S1, S2, S3) in the {|R⟩, |L⟩} basis:
/// S1 = pR − pL, S2 = pH − pV, S3 = pD − pA.
struct StokesVector {
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;

  double length() const;
};

/// α|0⟩ + β|1⟩ with |0⟩ = |l=+1⟩ = |R⟩ and |1⟩ = |l=−1⟩ = |L⟩.
class PureQubit {
 public:
  PureQubit(Complex alpha, Complex beta);

  /// Named states R, L, H, V, D, A.
  static PureQubit named(char name);
  /// cos(θ/2)|R⟩ + e^{iφ} sin(θ/2)|L⟩.
  static PureQubit from_bloch(double polar, double azimuth);

  Complex alpha() const { return alpha_; }
  Complex beta() const { return beta_; }
  Vector vector() const;

 private:
  Complex alpha_;
  Complex beta_;
};

/// Hermitian, unit-trace operator of dimension 2 or 4.
class DensityMatrix {
 public:
  /// Validates Hermiticity and trace within 1e-12.
  explicit DensityMatrix(Matrix entries, bool physicalized = false);

  static DensityMatrix pure(const Vector& psi);
  static DensityMatrix maximally_mixed(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }
  bool physicalized() const { return physicalized_; }

  /// Ascending eigenvalues.
  Eigen::VectorXd eigenvalues() const;

 private:
  Matrix m_;
  bool physicalized_;
};

/// Builds Stokes parameters from the six projection probabilities. Each
/// complementary pair must sum to 1 within `pair_tolerance`.
StokesVector stokes_from_probabilities(double p0, double p1, double pH, double pV, double pD,
                                       double pA, double pair_tolerance = 0.05);

/// ρ = ½(𝟙 + S1σz + S2σx + S3σy).
DensityMatrix density_from_stokes(const StokesVector& s);

/// Tr(ρσ) for a qubit density matrix.
StokesVector stokes_of(const DensityMatrix& rho);

/// (|α|²−|β|², 2Re(αβ*), −2Im(αβ*)).
StokesVector pure_to_stokes(const PureQubit& q);

/// ⟨ψ|ρ|ψ⟩; ψ is normalized internally. Throws on dimension mismatch.
double fidelity(const DensityMatrix& rho, const Vector& target);
double fidelity(const DensityMatrix& rho, const PureQubit& target);

/// Nearest unit-trace positive semidefinite matrix in Frobenius norm
/// (eigenvalues projected onto the probability simplex). Idempotent.
DensityMatrix project_physical(const DensityMatrix& rho);

/// Generalized Gell-Mann basis for dimension d (d²−1 traceless Hermitian
/// matrices, Tr(G_a G_b) = 2δ_ab): symmetric, antisymmetric, then diagonal.
std::vector<Matrix> gell_mann_basis(int dim);

/// x_a = Tr(ρ G_a), so that ρ = 𝟙/d + ½ Σ x_a G_a.
std::vector<double> bloch_vector(const DensityMatrix& rho);

}  // namespace oamtomo::qubit
