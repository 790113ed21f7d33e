#pragma once

#include "dynblock/fock.hpp"

namespace dynblock {

// Admissibility tolerances for a density matrix.
struct StateTolerances {
  double hermiticity = 1e-10;
  double trace = 1e-8;
  double positivity = 1e-7;
};

// A dim x dim Hermitian, unit-trace, positive semidefinite matrix. Factory
// functions build the textbook states; from_matrix validates arbitrary input.
class DensityMatrix {
 public:
  static DensityMatrix vacuum(const FockSpace& space);
  static DensityMatrix fock(const FockSpace& space, int n);
  // Built from normalized beta^n / sqrt(n!) amplitudes in the truncated basis.
  static DensityMatrix coherent(const FockSpace& space, Complex beta);
  // Bose-Einstein populations with mean occupation nbar, renormalized.
  static DensityMatrix thermal(const FockSpace& space, double nbar);

  // Throws InvalidArgument if any invariant is violated beyond tolerance.
  static DensityMatrix from_matrix(OperatorMatrix m, const StateTolerances& tol = {});
  // No validation. For states produced by trusted internal paths.
  static DensityMatrix unchecked(OperatorMatrix m) { return DensityMatrix(std::move(m)); }

  const OperatorMatrix& matrix() const noexcept { return m_; }
  int dim() const noexcept { return static_cast<int>(m_.rows()); }

  double hermiticity_error() const;
  double trace_error() const;
  double min_eigenvalue() const;
  double purity() const;
  // Combined population of the two highest retained Fock levels.
  double tail_population() const;

 private:
  explicit DensityMatrix(OperatorMatrix m) : m_(std::move(m)) {}
  OperatorMatrix m_;
};

// 0.5 * sum |eig(rho - sigma)|
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);
double trace_distance(const OperatorMatrix& rho, const OperatorMatrix& sigma);

}  // namespace dynblock
