#include <cmath>

#include "doctest.h"
#include "dynblock/errors.hpp"
#include "dynblock/fock.hpp"
#include "dynblock/observables.hpp"
#include "dynblock/state.hpp"
#include "oracles.hpp"

using namespace dynblock;
using dynblock::testing::max_abs;

TEST_CASE("annihilation matrix layout") {
  FockSpace space(3);
  const auto a = annihilation(space);
  CHECK(a(0, 1) == Complex(1.0, 0.0));
  CHECK(std::abs(a(1, 2) - std::sqrt(2.0)) < 1e-15);
  int nonzeros = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (a(i, j) != Complex(0.0, 0.0)) ++nonzeros;
  CHECK(nonzeros == 2);
}

TEST_CASE("dim=2 truncation makes a^2 vanish") {
  FockSpace space(2);
  CHECK(max_abs(space.annihilation() * space.annihilation()) == 0.0);
}

TEST_CASE("number operator spectrum at dim=10") {
  FockSpace space(10);
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> eig(space.number());
  for (int k = 0; k < 10; ++k) CHECK(std::abs(eig.eigenvalues()(k) - k) < 1e-12);
}

TEST_CASE("cached operators are exact products") {
  FockSpace space(12);
  const auto& a = space.annihilation();
  const auto& ad = space.creation();
  CHECK(max_abs(space.number() - ad * a) == 0.0);
  CHECK(max_abs(space.kerr() - ad * ad * a * a) == 0.0);
}

TEST_CASE("commutator [a, a^dag] shows the truncation artifact only in the last entry") {
  for (int d : {2, 5, 17}) {
    FockSpace space(d);
    const OperatorMatrix c =
        space.annihilation() * space.creation() - space.creation() * space.annihilation();
    OperatorMatrix expected = OperatorMatrix::Identity(d, d);
    expected(d - 1, d - 1) = -(d - 1.0);
    CHECK(max_abs(c - expected) < 1e-12);
  }
}

TEST_CASE("invalid spaces are rejected") {
  CHECK_THROWS_AS(FockSpace(1), InvalidSpace);
  CHECK_THROWS_AS(FockSpace(0), InvalidSpace);
}

TEST_CASE("displacement") {
  FockSpace space(30);
  SUBCASE("beta = 0 is the identity") {
    CHECK(max_abs(displacement(space, 0.0) - space.identity()) == 0.0);
  }
  SUBCASE("displaced vacuum is a coherent state") {
    const OperatorMatrix D = displacement(space, Complex(0.0, -1.0));
    const OperatorMatrix rho = D * DensityMatrix::vacuum(space).matrix() * D.adjoint();
    const auto m = moments(rho);
    CHECK(std::abs(m.n - 1.0) < 1e-8);
    CHECK(std::abs(*g2_equal(m) - 1.0) < 1e-8);
  }
  SUBCASE("unitarity, cross-checked against a Taylor-series exponential") {
    const OperatorMatrix D = displacement(space, 0.5);
    CHECK(max_abs(D * D.adjoint() - space.identity()) < 1e-10);
    CHECK(max_abs(D - dynblock::testing::displacement_series(space, 0.5)) < 1e-10);
  }
  SUBCASE("D(beta) D(-beta) = I while |beta|^2 <= dim/4") {
    for (Complex beta : {Complex(0.3, 0.1), Complex(-1.2, 2.0), Complex(0.0, 2.7)}) {
      REQUIRE(std::norm(beta) <= 30.0 / 4);
      CHECK(max_abs(displacement(space, beta) * displacement(space, -beta) - space.identity()) <
            1e-9);
    }
  }
  SUBCASE("non-finite amplitude") {
    CHECK_THROWS_AS(displacement(space, Complex(NAN, 0.0)), InvalidArgument);
    CHECK_THROWS_AS(displacement(space, Complex(0.0, INFINITY)), InvalidArgument);
  }
}

TEST_CASE("expectation values") {
  FockSpace space(25);
  CHECK(std::abs(expectation(space.number(), DensityMatrix::fock(space, 2)) - 2.0) < 1e-15);
  CHECK(std::abs(expectation(space.identity(), DensityMatrix::thermal(space, 0.7)) - 1.0) < 1e-12);

  // Coherent state from normalized beta^n/sqrt(n!) amplitudes, evaluated by hand.
  const double beta = 0.3;
  Eigen::VectorXcd psi(25);
  double fact = 1.0;
  for (int n = 0; n < 25; ++n) {
    if (n > 0) fact *= n;
    psi(n) = std::pow(beta, n) / std::sqrt(fact);
  }
  psi.normalize();
  const OperatorMatrix rho = psi * psi.adjoint();
  CHECK(std::abs(expectation(space.annihilation(), rho) - beta) < 1e-9);

  CHECK_THROWS_AS(expectation(FockSpace(3).number(), DensityMatrix::vacuum(space)),
                  InvalidArgument);
}

TEST_CASE("Hermitian observables have real expectations") {
  FockSpace space(15);
  const OperatorMatrix D = displacement(space, Complex(0.4, -0.7));
  const auto rho = DensityMatrix::from_matrix(D * DensityMatrix::thermal(space, 0.4).matrix() *
                                              D.adjoint());
  const OperatorMatrix x = space.annihilation() + space.creation();
  for (const OperatorMatrix* op : {&space.number(), &space.kerr(), &x}) {
    CHECK(std::abs(expectation(*op, rho).imag()) < 1e-12);
  }
}

TEST_CASE("density matrix validation") {
  FockSpace space(4);
  OperatorMatrix m = OperatorMatrix::Zero(4, 4);
  m(0, 0) = 0.5;
  CHECK_THROWS_AS(DensityMatrix::from_matrix(m), InvalidArgument);
  m(1, 1) = 0.5;
  m(0, 1) = Complex(0.0, 0.1);
  CHECK_THROWS_AS(DensityMatrix::from_matrix(m), InvalidArgument);
  m(1, 0) = Complex(0.0, -0.1);
  CHECK_NOTHROW(DensityMatrix::from_matrix(m));
  m(0, 1) = 0.9;
  m(1, 0) = 0.9;
  CHECK_THROWS_AS(DensityMatrix::from_matrix(m), InvalidArgument);
}
