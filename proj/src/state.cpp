#include "dynblock/state.hpp"

#include <cmath>
#include <sstream>

#include "dynblock/errors.hpp"

namespace dynblock {

DensityMatrix DensityMatrix::vacuum(const FockSpace& space) { return fock(space, 0); }

DensityMatrix DensityMatrix::fock(const FockSpace& space, int n) {
  if (n < 0 || n >= space.dim()) {
    throw InvalidArgument("Fock level " + std::to_string(n) + " outside space of dim " +
                          std::to_string(space.dim()));
  }
  OperatorMatrix m = OperatorMatrix::Zero(space.dim(), space.dim());
  m(n, n) = 1.0;
  return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::coherent(const FockSpace& space, Complex beta) {
  Eigen::VectorXcd psi(space.dim());
  Complex amp = 1.0;
  for (int n = 0; n < space.dim(); ++n) {
    if (n > 0) amp *= beta / std::sqrt(static_cast<double>(n));
    psi(n) = amp;
  }
  psi.normalize();
  return DensityMatrix(psi * psi.adjoint());
}

DensityMatrix DensityMatrix::thermal(const FockSpace& space, double nbar) {
  if (!(nbar >= 0.0)) throw InvalidArgument("thermal occupation must be non-negative");
  OperatorMatrix m = OperatorMatrix::Zero(space.dim(), space.dim());
  const double ratio = nbar / (1.0 + nbar);
  double p = 1.0, total = 0.0;
  for (int n = 0; n < space.dim(); ++n) {
    m(n, n) = p;
    total += p;
    p *= ratio;
  }
  m /= total;
  return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::from_matrix(OperatorMatrix m, const StateTolerances& tol) {
  if (m.rows() != m.cols() || m.rows() < 2) {
    throw InvalidArgument("density matrix must be square with dim >= 2");
  }
  DensityMatrix rho(std::move(m));
  std::ostringstream why;
  if (rho.hermiticity_error() > tol.hermiticity) {
    why << "not Hermitian (|rho - rho^dag|_max = " << rho.hermiticity_error() << ")";
  } else if (rho.trace_error() > tol.trace) {
    why << "trace deviates from 1 by " << rho.trace_error();
  } else if (rho.min_eigenvalue() < -tol.positivity) {
    why << "negative eigenvalue " << rho.min_eigenvalue();
  }
  if (!why.str().empty()) throw InvalidArgument("invalid density matrix: " + why.str());
  return rho;
}

double DensityMatrix::hermiticity_error() const {
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::trace_error() const { return std::abs(m_.trace() - Complex{1.0, 0.0}); }

double DensityMatrix::min_eigenvalue() const {
  const OperatorMatrix h = 0.5 * (m_ + m_.adjoint());
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> eig(h, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double DensityMatrix::purity() const { return expectation(m_, m_).real(); }

double DensityMatrix::tail_population() const {
  const int d = dim();
  return m_(d - 1, d - 1).real() + m_(d - 2, d - 2).real();
}

double trace_distance(const OperatorMatrix& rho, const OperatorMatrix& sigma) {
  if (rho.rows() != sigma.rows()) throw InvalidArgument("trace_distance: dimension mismatch");
  const OperatorMatrix diff = rho - sigma;
  const OperatorMatrix h = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> eig(h, Eigen::EigenvaluesOnly);
  return 0.5 * eig.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return trace_distance(rho.matrix(), sigma.matrix());
}

}  // namespace dynblock
