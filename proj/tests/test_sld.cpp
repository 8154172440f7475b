#include <doctest.h>

#include "helpers.hpp"
#include "qcomb/channels.hpp"
#include "qcomb/sld.hpp"

using namespace qcomb;
using namespace qtest;

namespace {

StatePair pure_pair(const ComplexVector& psi, const ComplexVector& dpsi) {
  return {psi * psi.adjoint(), dpsi * psi.adjoint() + psi * dpsi.adjoint()};
}

ComplexVector random_vector(std::size_t d, std::mt19937_64& g) { return random_matrix(d, 1, g).col(0); }

}  // namespace

TEST_CASE("pure state QFI matches the overlap formula") {
  std::mt19937_64 g(11);
  for (int t = 0; t < 20; ++t) {
    const std::size_t d = 2 + t % 5;
    ComplexVector psi = random_vector(d, g);
    psi.normalize();
    ComplexVector dpsi = random_vector(d, g);
    // keep the state normalized to first order
    dpsi -= (psi.adjoint() * dpsi)(0).real() * psi;
    const StatePair s = pure_pair(psi, dpsi);
    const cplx ov = (psi.adjoint() * dpsi)(0);
    const double expect = 4.0 * (dpsi.squaredNorm() - std::norm(ov));
    CHECK(qfi_of_state(s) == doctest::Approx(expect).epsilon(1e-9));
    CHECK(sld_residual(s, solve_sld(s)) < 1e-10);
  }
}

TEST_CASE("commuting family reduces to classical Fisher information") {
  std::mt19937_64 g(12);
  std::uniform_real_distribution<double> u(0.05, 1.0), v(-1.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    const std::size_t d = 3 + t % 3;
    RealVector p(d), dp(d);
    for (std::size_t i = 0; i < d; ++i) p(i) = u(g), dp(i) = v(g);
    p /= p.sum();
    dp.array() -= dp.mean();
    const ComplexMatrix U = random_unitary(d, g);
    StatePair s{U * p.cast<cplx>().asDiagonal() * U.adjoint(), U * dp.cast<cplx>().asDiagonal() * U.adjoint()};
    const double fi = (dp.array().square() / p.array()).sum();
    CHECK(qfi_of_state(s) == doctest::Approx(fi).epsilon(1e-9));
  }
}

TEST_CASE("qubit Bloch-vector formula") {
  std::mt19937_64 g(13);
  std::normal_distribution<double> n;
  for (int t = 0; t < 10; ++t) {
    Eigen::Vector3d r(n(g), n(g), n(g));
    r *= (0.1 + 0.08 * t) / r.norm();
    const Eigen::Vector3d dr(n(g), n(g), n(g));
    auto bloch = [](const Eigen::Vector3d& b, double c) -> ComplexMatrix {
      return (c * identity(2) + b(0) * pauli_x() + b(1) * pauli_y() + b(2) * pauli_z()) / 2.0;
    };
    const StatePair s{bloch(r, 1.0), bloch(dr, 0.0)};
    const double rd = r.dot(dr);
    const double expect = dr.squaredNorm() + rd * rd / (1 - r.squaredNorm());
    CHECK(qfi_of_state(s) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("pre-QFI is maximized by the SLD") {
  std::mt19937_64 g(14);
  for (int t = 0; t < 10; ++t) {
    const std::size_t d = 4;
    const ComplexMatrix rho = random_density(d, g, 1 + t % 4);
    const ComplexMatrix A = random_hermitian(d, g);
    const ComplexMatrix drho = cplx(0, 1) * (A * rho - rho * A);
    const StatePair s{rho, drho};
    const ComplexMatrix L = solve_sld(s);
    const double q = qfi_of_state(s);
    CHECK(pre_qfi(s, L) == doctest::Approx(q).epsilon(1e-9));
    for (int k = 0; k < 5; ++k) CHECK(pre_qfi(s, L + 0.3 * random_hermitian(d, g)) <= q + 1e-9);
    CHECK(is_hermitian(L, 1e-10));
  }
}

TEST_CASE("QFI is unitarily invariant and additive under tensor products") {
  std::mt19937_64 g(15);
  const ComplexMatrix rho = random_density(3, g);
  const ComplexMatrix H = random_hermitian(3, g);
  const StatePair s{rho, cplx(0, -1) * (H * rho - rho * H)};
  const ComplexMatrix U = random_unitary(3, g);
  const StatePair su{U * s.rho * U.adjoint(), U * s.drho * U.adjoint()};
  CHECK(qfi_of_state(su) == doctest::Approx(qfi_of_state(s)).epsilon(1e-9));

  const StatePair s2{kron(s.rho, s.rho), kron(s.drho, s.rho) + kron(s.rho, s.drho)};
  CHECK(qfi_of_state(s2) == doctest::Approx(2 * qfi_of_state(s)).epsilon(1e-8));
}

TEST_CASE("maximally mixed state and zero derivative give zero") {
  const StatePair s{identity(4) / 4.0, ComplexMatrix::Zero(4, 4)};
  CHECK(qfi_of_state(s) == 0.0);
  CHECK(solve_sld(s).norm() == 0.0);
}

TEST_CASE("invalid state pairs are rejected") {
  std::mt19937_64 g(16);
  StatePair s{random_density(3, g), ComplexMatrix::Zero(3, 3)};
  CHECK_NOTHROW(s.validate());
  StatePair wrong_trace{2.0 * s.rho, s.drho};
  CHECK_THROWS_AS(wrong_trace.validate(), std::invalid_argument);
  StatePair shape{s.rho, ComplexMatrix::Zero(2, 2)};
  CHECK_THROWS_AS(shape.validate(), std::invalid_argument);
  ComplexMatrix neg = ComplexMatrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  StatePair negative{neg, ComplexMatrix::Zero(2, 2)};
  CHECK_THROWS_AS(negative.validate(), std::invalid_argument);
  StatePair nonzero_trace_derivative{s.rho, identity(3)};
  CHECK_THROWS_AS(nonzero_trace_derivative.validate(), std::invalid_argument);
}
