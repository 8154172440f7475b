#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "qcomb/channels.hpp"
#include "qcomb/sdp.hpp"

using namespace qcomb;
using namespace qcomb::sdp;
using namespace qtest;

namespace {

Constraint trace_one(std::size_t n, std::size_t block = 0) {
  Constraint c;
  c.parts.push_back(sparse_part(block, ComplexMatrix::Identity(n, n)));
  c.rhs = 1.0;
  return c;
}

// Strictly feasible primal and dual: b from X0 > 0, C = Z0 + sum y0_i A_i with Z0 > 0.
Problem random_feasible(std::mt19937_64& g, std::size_t n, std::size_t m) {
  Problem p;
  p.block_dims = {n};
  const ComplexMatrix X0 = random_density(n, g) + 0.1 * identity(n);
  const ComplexMatrix Z0 = random_density(n, g) + 0.1 * identity(n);
  std::normal_distribution<double> nd;
  ComplexMatrix C = Z0;
  for (std::size_t i = 0; i < m; ++i) {
    const ComplexMatrix A = random_hermitian(n, g);
    Constraint c;
    c.parts.push_back(sparse_part(0, A));
    c.rhs = (A * X0).trace().real();
    const double y = nd(g);
    C += y * A;
    p.constraints.push_back(std::move(c));
  }
  p.objective = {C};
  return p;
}

}  // namespace

TEST_CASE("trace-one minimization picks the smallest diagonal entry") {
  Problem p;
  p.block_dims = {2};
  ComplexMatrix C = ComplexMatrix::Zero(2, 2);
  C(0, 0) = 1;
  C(1, 1) = 2;
  p.objective = {C};
  p.constraints = {trace_one(2)};
  const auto s = solve(p);
  CHECK(s.status == Status::Optimal);
  CHECK(s.primal_objective == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(s.X[0](0, 0) - 1.0) < 1e-6);
  CHECK(std::abs(s.X[0](1, 1)) < 1e-6);
}

TEST_CASE("maximizing the trace of a channel Choi operator gives d_in") {
  const std::size_t d_out = 2, d_in = 4;
  Problem p;
  p.block_dims = {d_out * d_in};
  p.objective = {-identity(d_out * d_in)};
  for (const auto& b : hermitian_basis(d_in)) {
    Constraint c;
    c.parts.push_back(sparse_part(0, kron(identity(d_out), b)));
    c.rhs = b.trace().real();
    p.constraints.push_back(std::move(c));
  }
  const auto s = solve(p);
  CHECK(s.status == Status::Optimal);
  CHECK(-s.primal_objective == doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("two-by-two LMI: min lambda with [[lambda, a], [a, lambda]] >= 0") {
  std::mt19937_64 g(21);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 5; ++t) {
    const double a = u(g);
    LmiProblem l;
    l.block_dims = {2};
    l.c = RealVector::Ones(1);
    ComplexMatrix m0 = ComplexMatrix::Zero(2, 2);
    m0(0, 1) = m0(1, 0) = a;
    l.m0 = {m0};
    l.mi = {{identity(2)}};
    const auto s = solve_lmi(l);
    CHECK(s.status == Status::Optimal);
    CHECK(s.objective == doctest::Approx(std::abs(a)).epsilon(1e-7));
  }
}

TEST_CASE("maximum eigenvalue and fidelity oracles") {
  std::mt19937_64 g(1);
  const ComplexMatrix H = random_hermitian(6, g);
  Problem p;
  p.block_dims = {6};
  p.objective = {-H};
  p.constraints = {trace_one(6)};
  const auto s = solve(p);
  CHECK(s.status == Status::Optimal);
  CHECK(-s.primal_objective == doctest::Approx(herm_eig(H).values.maxCoeff()).epsilon(1e-7));

  // Fidelity sqrt-form: max Re Tr Y s.t. [[rho, Y], [Y^dag, sigma]] >= 0.
  const std::size_t n = 3;
  const ComplexMatrix rho = random_density(n, g), sigma = random_density(n, g);
  Problem f;
  f.block_dims = {2 * n};
  ComplexMatrix C = ComplexMatrix::Zero(2 * n, 2 * n);
  C.block(0, n, n, n) = -0.5 * identity(n);
  C.block(n, 0, n, n) = -0.5 * identity(n);
  f.objective = {C};
  for (int blk = 0; blk < 2; ++blk) {
    const ComplexMatrix& T = blk ? sigma : rho;
    for (const auto& b : hermitian_basis(n)) {
      ComplexMatrix full = ComplexMatrix::Zero(2 * n, 2 * n);
      full.block(blk * n, blk * n, n, n) = b;
      Constraint c;
      c.parts.push_back(sparse_part(0, full));
      c.rhs = (b * T).trace().real();
      f.constraints.push_back(std::move(c));
    }
  }
  Options o;
  o.keep_trace = true;
  const auto fs = solve(f, o);
  CHECK(fs.status == Status::Optimal);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> e1(rho);
  const ComplexMatrix sr = e1.operatorSqrt();
  const auto e2 = herm_eig(hermitian_part(sr * sigma * sr));
  CHECK(-fs.primal_objective == doctest::Approx(e2.values.cwiseMax(0).cwiseSqrt().sum()).epsilon(1e-7));
  for (const auto& it : fs.trace)
    if (it.primal_infeasibility < 1e-9 && it.dual_infeasibility < 1e-9) CHECK(it.dual_objective <= it.primal_objective + 1e-9);
}

TEST_CASE("random strictly feasible problems close the duality gap") {
  std::mt19937_64 g(2024);
  std::uniform_int_distribution<std::size_t> dim(2, 32);
  int optimal = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = dim(g);
    std::uniform_int_distribution<std::size_t> mm(1, std::min<std::size_t>(n * n - 1, 40));
    const Problem p = random_feasible(g, n, mm(g));
    Options o;
    o.keep_trace = true;
    const auto s = solve(p, o);
    if (s.status == Status::Optimal) ++optimal;
    CHECK(s.status == Status::Optimal);
    CHECK(s.gap < 1e-7);
    CHECK(s.iterations <= 200);
    for (const auto& it : s.trace)
      if (it.primal_infeasibility < 1e-9 && it.dual_infeasibility < 1e-9)
        CHECK(it.dual_objective <= it.primal_objective + 1e-8 * (1 + std::abs(it.primal_objective)));
  }
  CHECK(optimal == 50);
}

TEST_CASE("row rescaling leaves the solution unchanged") {
  std::mt19937_64 g(5);
  Problem p = random_feasible(g, 6, 8);
  const auto a = solve(p);
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const double s = std::pow(10.0, static_cast<double>(i % 5) - 2.0);
    for (auto& part : p.constraints[i].parts)
      for (auto& e : part.entries) e.value *= s;
    p.constraints[i].rhs *= s;
  }
  const auto b = solve(p);
  REQUIRE(a.status == Status::Optimal);
  REQUIRE(b.status == Status::Optimal);
  CHECK((a.X[0] - b.X[0]).norm() < 1e-7 * std::max(1.0, a.X[0].norm()) + 1e-6);
  CHECK(a.primal_objective == doctest::Approx(b.primal_objective).epsilon(1e-7));
}

TEST_CASE("redundant constraints are dropped") {
  std::mt19937_64 g(6);
  Problem p = random_feasible(g, 4, 5);
  p.constraints.push_back(p.constraints[0]);
  p.constraints.back().parts[0].entries[0].value *= 1.0;
  const auto s = solve(p);
  CHECK(s.status == Status::Optimal);
  CHECK(s.dropped_constraints.size() == 1);
}

TEST_CASE("infeasible and unbounded problems are certified") {
  Problem p;
  p.block_dims = {3};
  p.objective = {identity(3)};
  p.constraints = {trace_one(3)};
  p.constraints[0].rhs = -1.0;
  const auto s = solve(p);
  CHECK(s.status == Status::Infeasible);
  CHECK(s.primal_infeasible);

  Problem u;
  u.block_dims = {2};
  ComplexMatrix C = ComplexMatrix::Zero(2, 2);
  C(0, 0) = -1;
  u.objective = {C};
  Constraint c;
  c.parts.push_back(sparse_part(0, pauli_z()));
  c.rhs = 0.0;
  u.constraints = {c};
  const auto us = solve(u);
  CHECK(us.status == Status::Infeasible);
  CHECK(us.dual_infeasible);
}

TEST_CASE("kron_identity constraints match their expanded form") {
  std::mt19937_64 g(31);
  const std::size_t r = 3, q = 2, n = r * q;
  Problem compact, expanded;
  compact.block_dims = expanded.block_dims = {n};
  const ComplexMatrix C = random_hermitian(n, g);
  compact.objective = expanded.objective = {C};
  for (const auto& b : hermitian_basis(r)) {
    Constraint c1, c2;
    BlockPart part = sparse_part(0, b);
    part.kron_identity = q;
    c1.parts.push_back(part);
    c2.parts.push_back(sparse_part(0, kron(b, identity(q))));
    c1.rhs = c2.rhs = b.trace().real();
    compact.constraints.push_back(c1);
    expanded.constraints.push_back(c2);
  }
  const auto a = solve(compact), b = solve(expanded);
  REQUIRE(a.status == Status::Optimal);
  REQUIRE(b.status == Status::Optimal);
  CHECK(a.primal_objective == doctest::Approx(b.primal_objective).epsilon(1e-8));
  CHECK(inner(compact.constraints[0].parts[0], a.X[0]) == doctest::Approx(compact.constraints[0].rhs).epsilon(1e-8));
}

TEST_CASE("affine projection lands on the constraint set") {
  std::mt19937_64 g(8);
  const Problem p = random_feasible(g, 5, 7);
  const auto X = project_affine(p, {random_hermitian(5, g)});
  for (const auto& c : p.constraints) CHECK(inner(c.parts[0], X[0]) == doctest::Approx(c.rhs).epsilon(1e-10));
}

TEST_CASE("svec is an isometry and hermitian_basis is orthonormal") {
  std::mt19937_64 g(3);
  const ComplexMatrix a = random_hermitian(4, g), b = random_hermitian(4, g);
  CHECK(svec(a).dot(svec(b)) == doctest::Approx((a * b).trace().real()));
  CHECK((smat(svec(a), 4) - a).norm() < 1e-14);
  const auto basis = hermitian_basis(3);
  REQUIRE(basis.size() == 9);
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = 0; j < basis.size(); ++j)
      CHECK((basis[i] * basis[j]).trace().real() == doctest::Approx(i == j ? 1.0 : 0.0));
}

TEST_CASE("problem dump round trip") {
  std::mt19937_64 g(4);
  Problem p = random_feasible(g, 4, 3);
  p.constraints[1].parts[0].kron_identity = 1;
  std::stringstream ss;
  write_dump(p, ss);
  const Problem q = read_dump(ss);
  REQUIRE(q.constraints.size() == p.constraints.size());
  CHECK((q.objective[0] - p.objective[0]).norm() < 1e-15);
  const auto a = solve(p), b = solve(q);
  CHECK(a.primal_objective == b.primal_objective);
  std::stringstream bad("qcomb-sdp 2\n");
  CHECK_THROWS(read_dump(bad));
}
