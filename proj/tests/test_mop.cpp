#include <doctest.h>

#include "helpers.hpp"
#include "qcomb/mop.hpp"
#include "qcomb/tn_iss.hpp"

using namespace qcomb;
using namespace qtest;

namespace {

NoiseModelSpec spec(NoiseVariant v, double p) {
  NoiseModelSpec s;
  s.variant = v;
  s.p = p;
  return s;
}

// QFI of (channel (x) id) on the purification of a qubit input with Bloch vector r, built from raw Kraus data.
double purified_qfi(const MopProblem& m, const Eigen::Vector3d& r) {
  const ComplexMatrix rho =
      (identity(2) + r(0) * pauli_x() + r(1) * pauli_y() + r(2) * pauli_z()) / 2.0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho);
  ComplexVector psi = ComplexVector::Zero(4);
  for (int i = 0; i < 2; ++i) {
    const double w = std::sqrt(std::max(0.0, es.eigenvalues()(i)));
    for (int a = 0; a < 2; ++a) psi(a * 2 + i) += w * es.eigenvectors()(a, i);
  }
  StatePair s{ComplexMatrix::Zero(4, 4), ComplexMatrix::Zero(4, 4)};
  for (std::size_t k = 0; k < m.rank(); ++k) {
    const ComplexVector v = kron(m.kraus[k], identity(2)) * psi;
    const ComplexVector dv = kron(m.derivative[k], identity(2)) * psi;
    s.rho += v * v.adjoint();
    s.drho += dv * v.adjoint() + v * dv.adjoint();
  }
  return qfi_of_state(s);
}

double brute_force_qfi(const MopProblem& m) {
  const int n = 20;
  double best = 0;
  Eigen::Vector3d arg = Eigen::Vector3d::Zero();
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j)
      for (int k = -n; k <= n; ++k) {
        Eigen::Vector3d r(i, j, k);
        r /= n;
        if (r.norm() > 1.0) continue;
        const double q = purified_qfi(m, r);
        if (q > best) best = q, arg = r;
      }
  for (double step = 0.05; step > 1e-7; step *= 0.5)
    for (bool moved = true; moved;) {
      moved = false;
      for (int ax = 0; ax < 3; ++ax)
        for (double sgn : {-1.0, 1.0}) {
          Eigen::Vector3d r = arg;
          r(ax) += sgn * step;
          if (r.norm() > 1.0) r /= r.norm();
          const double q = purified_qfi(m, r);
          if (q > best + 1e-14) best = q, arg = r, moved = true;
        }
    }
  return best;
}

const NoiseVariant kUncorrelated[] = {NoiseVariant::DephasingPerp, NoiseVariant::DephasingParallel,
                                      NoiseVariant::DampingPerp, NoiseVariant::DampingParallel};

}  // namespace

TEST_CASE("perpendicular dephasing at p=0.9 matches a brute-force input search") {
  const MopProblem m = mop_problem(spec(NoiseVariant::DephasingPerp, 0.9));
  const auto r = channel_qfi_mop(m);
  REQUIRE(r.status == sdp::Status::Optimal);
  CHECK(r.qfi == doctest::Approx(brute_force_qfi(m)).epsilon(1e-6));
  CHECK(r.qfi == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("single-use QFI of every uncorrelated model agrees with the brute-force search") {
  for (auto v : kUncorrelated)
    for (double p : {0.55, 0.8, 0.95}) {
      CAPTURE(to_string(v));
      CAPTURE(p);
      const MopProblem m = mop_problem(spec(v, p));
      const auto r = channel_qfi_mop(m);
      REQUIRE(r.status == sdp::Status::Optimal);
      CHECK(r.qfi == doctest::Approx(brute_force_qfi(m)).epsilon(1e-6));
    }
}

TEST_CASE("frozen single-use values") {
  for (double p : {0.5, 0.75, 0.9}) {
    const auto r = channel_qfi_mop(mop_problem(spec(NoiseVariant::DephasingParallel, p)));
    CHECK(r.qfi == doctest::Approx((2 * p - 1) * (2 * p - 1)).epsilon(1e-7));
  }
  CHECK(channel_qfi_mop(mop_problem(spec(NoiseVariant::DampingParallel, 0.9))).qfi ==
        doctest::Approx(0.9480254045).epsilon(1e-8));
  CHECK(channel_qfi_mop(mop_problem(spec(NoiseVariant::DampingParallel, 0.5))).qfi ==
        doctest::Approx(0.6862915031).epsilon(1e-8));
  CHECK(channel_qfi_mop(mop_problem(spec(NoiseVariant::DampingPerp, 0.75))).qfi == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("noiseless channel has QFI one") {
  const auto m = mop_problem(spec(NoiseVariant::DephasingParallel, 1.0));
  const auto r = channel_qfi_mop(m);
  CHECK(r.qfi == doctest::Approx(1.0).epsilon(1e-8));
  const auto in = optimal_input_state(m, r.h);
  CHECK(qfi_of_state(apply_to_purification(m, in.rho)) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("QFI is invariant under unitary mixing of the Kraus operators") {
  std::mt19937_64 g(41);
  for (auto v : kUncorrelated) {
    const MopProblem m = mop_problem(spec(v, 0.8));
    MopProblem mixed = m;
    const std::size_t r = m.rank();
    const ComplexMatrix u = random_unitary(r, g);
    for (std::size_t i = 0; i < r; ++i) {
      mixed.kraus[i].setZero();
      mixed.derivative[i].setZero();
      for (std::size_t j = 0; j < r; ++j) {
        mixed.kraus[i] += u(i, j) * m.kraus[j];
        mixed.derivative[i] += u(i, j) * m.derivative[j];
      }
    }
    CHECK(channel_qfi_mop(mixed).qfi == doctest::Approx(channel_qfi_mop(m).qfi).epsilon(1e-6));
  }
}

TEST_CASE("MOP value bounds the QFI of arbitrary probes and of any h") {
  std::mt19937_64 g(42);
  for (auto v : kUncorrelated) {
    const MopProblem m = mop_problem(spec(v, 0.7));
    const double q = channel_qfi_mop(m).qfi;
    for (int t = 0; t < 10; ++t) {
      CHECK(qfi_of_state(apply_to_purification(m, random_density(2, g))) <= q + 1e-7);
      const ComplexMatrix h = random_hermitian(m.rank(), g);
      CHECK(4.0 * herm_eig(mop_alpha(m, h)).values.maxCoeff() >= q - 1e-7);
    }
  }
}

TEST_CASE("optimal input attains the channel QFI") {
  for (auto v : kUncorrelated)
    for (double p : {0.6, 0.9}) {
      CAPTURE(to_string(v));
      const MopProblem m = mop_problem(spec(v, p));
      const auto r = channel_qfi_mop(m);
      const auto in = optimal_input_state(m, r.h);
      CHECK(in.max_gradient <= 1e-5);
      CHECK(std::abs(in.rho.trace().real() - 1.0) < 1e-8);
      CHECK(herm_eig(in.rho).values.minCoeff() > -1e-8);
      CHECK(qfi_of_state(apply_to_purification(m, in.rho)) == doctest::Approx(r.qfi).epsilon(1e-5));
    }
}

TEST_CASE("single-slot optimization reaches the channel QFI") {
  for (auto v : kUncorrelated) {
    CAPTURE(to_string(v));
    const auto s = spec(v, 0.75);
    IssConfig c;
    c.d_A = 2;
    c.threshold = 1e-6;
    c.max_sweeps = 2000;
    const auto o = optimize(s, 1, c);
    CHECK(o.qfi == doctest::Approx(channel_qfi_mop(mop_problem(s)).qfi).epsilon(1e-4));
  }
}

TEST_CASE("mop rejects correlated models and malformed input") {
  NoiseModelSpec s = spec(NoiseVariant::CorrelatedDephasing, 0.8);
  s.C = 0.5;
  CHECK_THROWS_AS(mop_problem(s), std::invalid_argument);
  MopProblem m = mop_problem(spec(NoiseVariant::DampingParallel, 0.8));
  m.derivative.pop_back();
  CHECK_THROWS(m.validate());
}
