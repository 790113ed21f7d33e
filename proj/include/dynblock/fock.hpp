#pragma once

#include <complex>

#include <Eigen/Dense>

namespace dynblock {

using Complex = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;

inline constexpr Complex kI{0.0, 1.0};

// Truncated single-mode Fock space |0>..|dim-1> with the ladder algebra
// precomputed. Immutable after construction.
class FockSpace {
 public:
  explicit FockSpace(int dim);

  int dim() const noexcept { return dim_; }

  const OperatorMatrix& annihilation() const noexcept { return a_; }
  const OperatorMatrix& creation() const noexcept { return adag_; }
  const OperatorMatrix& number() const noexcept { return n_; }
  // a^dag a^dag a a
  const OperatorMatrix& kerr() const noexcept { return kerr_; }
  // a^dag a a, the three-operator moment entering f(t)
  const OperatorMatrix& number_annihilation() const noexcept { return na_; }
  OperatorMatrix identity() const { return OperatorMatrix::Identity(dim_, dim_); }

 private:
  int dim_;
  OperatorMatrix a_, adag_, n_, kerr_, na_;
};

OperatorMatrix annihilation(const FockSpace& space);
OperatorMatrix creation(const FockSpace& space);

// D(beta) = exp(beta a^dag - beta* a), evaluated through the eigenbasis of
// the Hermitian matrix i(beta a^dag - beta* a).
OperatorMatrix displacement(const FockSpace& space, Complex beta);

class DensityMatrix;

// trace(op * rho)
Complex expectation(const OperatorMatrix& op, const DensityMatrix& rho);
Complex expectation(const OperatorMatrix& op, const OperatorMatrix& rho);

}  // namespace dynblock
