#include "dynblock/fock.hpp"

#include <cmath>

#include "dynblock/errors.hpp"
#include "dynblock/state.hpp"

namespace dynblock {

FockSpace::FockSpace(int dim) : dim_(dim) {
  if (dim < 2) {
    throw InvalidSpace("Fock space needs at least two levels, got dim=" + std::to_string(dim));
  }
  a_ = OperatorMatrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a_(n - 1, n) = std::sqrt(static_cast<double>(n));
  adag_ = a_.adjoint();
  n_ = adag_ * a_;
  kerr_ = adag_ * adag_ * a_ * a_;
  na_ = adag_ * a_ * a_;
}

OperatorMatrix annihilation(const FockSpace& space) { return space.annihilation(); }
OperatorMatrix creation(const FockSpace& space) { return space.creation(); }

OperatorMatrix displacement(const FockSpace& space, Complex beta) {
  if (!std::isfinite(beta.real()) || !std::isfinite(beta.imag())) {
    throw InvalidArgument("displacement amplitude must be finite");
  }
  if (beta == Complex{0.0, 0.0}) return space.identity();

  // G = beta a^dag - beta* a is anti-Hermitian, so K = iG is Hermitian and
  // exp(G) = V exp(-i lambda) V^dag.
  const OperatorMatrix generator = beta * space.creation() - std::conj(beta) * space.annihilation();
  const OperatorMatrix hermitian = kI * generator;
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> eig(hermitian);
  const Eigen::VectorXcd phases =
      (-kI * eig.eigenvalues().cast<Complex>()).array().exp().matrix();
  return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

Complex expectation(const OperatorMatrix& op, const OperatorMatrix& rho) {
  if (op.rows() != rho.rows() || op.cols() != rho.cols()) {
    throw InvalidArgument("expectation: operator is " + std::to_string(op.rows()) + "x" +
                          std::to_string(op.cols()) + " but state is " +
                          std::to_string(rho.rows()) + "x" + std::to_string(rho.cols()));
  }
  // trace(A B) = sum_ij A_ij B_ji
  return op.cwiseProduct(rho.transpose()).sum();
}

Complex expectation(const OperatorMatrix& op, const DensityMatrix& rho) {
  return expectation(op, rho.matrix());
}

}  // namespace dynblock
