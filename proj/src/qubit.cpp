#include "oamtomo/qubit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oamtomo/error.hpp"

namespace oamtomo::qubit {

namespace {

constexpr double kStructureTol = 1e-12;

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    throw InvalidArgument(std::string("probability ") + name + " outside [0, 1]");
}

void check_pair(double a, double b, double tol, const char* pair) {
  if (std::abs(a + b - 1.0) > tol)
    throw InvalidArgument(std::string("complementary probabilities ") + pair + " sum to " +
                          std::to_string(a + b) + ", beyond tolerance " + std::to_string(tol));
}

// Euclidean projection of v onto {x >= 0, Σx = 1}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) tau = t;
  }
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = std::max(v(i) - tau, 0.0);
  return out;
}

}  // namespace

double StokesVector::length() const { return std::sqrt(s1 * s1 + s2 * s2 + s3 * s3); }

PureQubit::PureQubit(Complex alpha, Complex beta) : alpha_(alpha), beta_(beta) {
  if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > kStructureTol)
    throw InvalidArgument("qubit amplitudes must satisfy |alpha|^2 + |beta|^2 = 1");
}

PureQubit PureQubit::named(char name) {
  const double h = std::sqrt(0.5);
  switch (name) {
    case 'R': return {1.0, 0.0};
    case 'L': return {0.0, 1.0};
    case 'H': return {h, h};
    case 'V': return {h, -h};
    case 'D': return {h, Complex(0.0, h)};
    case 'A': return {h, Complex(0.0, -h)};
    default: throw InvalidArgument(std::string("unknown named state '") + name + "'");
  }
}

PureQubit PureQubit::from_bloch(double polar, double azimuth) {
  return {std::cos(polar / 2.0), std::polar(std::sin(polar / 2.0), azimuth)};
}

Vector PureQubit::vector() const {
  Vector v(2);
  v << alpha_, beta_;
  return v;
}

DensityMatrix::DensityMatrix(Matrix entries, bool physicalized)
    : m_(std::move(entries)), physicalized_(physicalized) {
  if (m_.rows() != m_.cols()) throw InvalidArgument("density matrix must be square");
  if (m_.rows() != 2 && m_.rows() != 4)
    throw InvalidArgument("density matrix dimension must be 2 or 4");
  if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kStructureTol)
    throw InvalidArgument("density matrix is not Hermitian");
  if (std::abs(m_.trace() - Complex(1.0, 0.0)) > kStructureTol)
    throw InvalidArgument("density matrix trace differs from 1");
  // remove the sub-tolerance anti-Hermitian part
  m_ = 0.5 * (m_ + m_.adjoint()).eval();
}

DensityMatrix DensityMatrix::pure(const Vector& psi) {
  const Vector u = psi / psi.norm();
  return DensityMatrix(u * u.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

Eigen::VectorXd DensityMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

StokesVector stokes_from_probabilities(double p0, double p1, double pH, double pV, double pD,
                                       double pA, double pair_tolerance) {
  check_probability(p0, "p0");
  check_probability(p1, "p1");
  check_probability(pH, "pH");
  check_probability(pV, "pV");
  check_probability(pD, "pD");
  check_probability(pA, "pA");
  check_pair(p0, p1, pair_tolerance, "(p0, p1)");
  check_pair(pH, pV, pair_tolerance, "(pH, pV)");
  check_pair(pD, pA, pair_tolerance, "(pD, pA)");
  return {p0 - p1, pH - pV, pD - pA};
}

DensityMatrix density_from_stokes(const StokesVector& s) {
  if (!std::isfinite(s.s1) || !std::isfinite(s.s2) || !std::isfinite(s.s3))
    throw InvalidArgument("Stokes components must be finite");
  Matrix m(2, 2);
  m(0, 0) = 0.5 * (1.0 + s.s1);
  m(0, 1) = 0.5 * Complex(s.s2, -s.s3);
  m(1, 0) = 0.5 * Complex(s.s2, s.s3);
  m(1, 1) = 0.5 * (1.0 - s.s1);
  return DensityMatrix(std::move(m));
}

StokesVector stokes_of(const DensityMatrix& rho) {
  if (rho.dim() != 2) throw InvalidArgument("Stokes parameters need a qubit density matrix");
  const Matrix& m = rho.matrix();
  return {(m(0, 0) - m(1, 1)).real(), 2.0 * m(1, 0).real(), 2.0 * m(1, 0).imag()};
}

StokesVector pure_to_stokes(const PureQubit& q) {
  const Complex ab = q.alpha() * std::conj(q.beta());
  return {std::norm(q.alpha()) - std::norm(q.beta()), 2.0 * ab.real(), -2.0 * ab.imag()};
}

double fidelity(const DensityMatrix& rho, const Vector& target) {
  if (target.size() != rho.dim())
    throw InvalidArgument("fidelity target dimension " + std::to_string(target.size()) +
                          " differs from density matrix dimension " +
                          std::to_string(rho.dim()));
  const Vector u = target / target.norm();
  return (u.adjoint() * rho.matrix() * u)(0, 0).real();
}

double fidelity(const DensityMatrix& rho, const PureQubit& target) {
  return fidelity(rho, target.vector());
}

DensityMatrix project_physical(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix());
  const Eigen::VectorXd lambda = es.eigenvalues();
  if (lambda.minCoeff() >= 0.0) return DensityMatrix(rho.matrix(), true);
  const Eigen::VectorXd mu = project_simplex(lambda);
  const Matrix& v = es.eigenvectors();
  Matrix out = v * mu.cast<Complex>().asDiagonal() * v.adjoint();
  // the simplex projection fixes the trace analytically; trim round-off
  out /= out.trace().real();
  return DensityMatrix(std::move(out), true);
}

std::vector<Matrix> gell_mann_basis(int dim) {
  std::vector<Matrix> basis;
  const Complex i(0.0, 1.0);
  for (int j = 0; j < dim; ++j)
    for (int k = j + 1; k < dim; ++k) {
      Matrix g = Matrix::Zero(dim, dim);
      g(j, k) = 1.0;
      g(k, j) = 1.0;
      basis.push_back(std::move(g));
    }
  for (int j = 0; j < dim; ++j)
    for (int k = j + 1; k < dim; ++k) {
      Matrix g = Matrix::Zero(dim, dim);
      g(j, k) = -i;
      g(k, j) = i;
      basis.push_back(std::move(g));
    }
  for (int l = 1; l < dim; ++l) {
    Matrix g = Matrix::Zero(dim, dim);
    const double c = std::sqrt(2.0 / (l * (l + 1.0)));
    for (int j = 0; j < l; ++j) g(j, j) = c;
    g(l, l) = -c * l;
    basis.push_back(std::move(g));
  }
  return basis;
}

std::vector<double> bloch_vector(const DensityMatrix& rho) {
  std::vector<double> x;
  for (const Matrix& g : gell_mann_basis(rho.dim()))
    x.push_back((rho.matrix() * g).trace().real());
  return x;
}

}  // namespace oamtomo::qubit
