#include "qcomb/analytic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qcomb {

namespace {

const cplx kI(0.0, 1.0);

Eigen::VectorXcd basis_ket(std::size_t dim, std::size_t i) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
  v(i) = 1.0;
  return v;
}

// Ket over qubits written as a bit string, first character most significant.
Eigen::VectorXcd bits(const std::string& s) {
  std::size_t idx = 0;
  for (char ch : s) idx = 2 * idx + static_cast<std::size_t>(ch - '0');
  return basis_ket(std::size_t{1} << s.size(), idx);
}

ComplexMatrix outer(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) { return a * b.adjoint(); }

KrausSet state_tooth(const Eigen::VectorXcd& psi) {
  KrausSet k;
  k.operators = {ComplexMatrix(psi)};
  k.d_in = 1;
  k.d_out = static_cast<std::size_t>(psi.size());
  return k;
}

KrausSet tooth(std::vector<ComplexMatrix> ops) {
  KrausSet k;
  k.d_in = static_cast<std::size_t>(ops.at(0).cols());
  k.d_out = static_cast<std::size_t>(ops.at(0).rows());
  k.operators = std::move(ops);
  return k;
}

void check_p(double p, const char* who) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(who) + ": p must lie in [0,1]");
}

}  // namespace

double perp_dephasing_qfi2(double p) {
  check_p(p, "perp_dephasing_qfi2");
  return 2.0 * (1.0 + std::abs(1.0 - 2.0 * p));
}

double parallel_dephasing_bound(std::size_t N, double p) {
  check_p(p, "parallel_dephasing_bound");
  if (p == 0.0 || p == 1.0) throw std::invalid_argument("parallel_dephasing_bound: p must lie strictly inside (0,1)");
  return static_cast<double>(N) * (p - 0.5) * (p - 0.5) / (p * (1.0 - p));
}

PerpDampingProtocol perp_damping_optimal(std::size_t N, double p) {
  if (N == 0) throw std::invalid_argument("perp_damping_optimal: N must be positive");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("perp_damping_optimal: p must lie in (0,1)");
  PerpDampingProtocol r;
  r.N = N;
  r.p = p;
  const double sp = std::sqrt(p), knee = sp / (1.0 - p);
  double c = 1.0;
  r.c.push_back(c);
  for (std::size_t i = 1; i < N; ++i) {
    const double t = c < knee ? 1.0 : sp / (c * (1.0 - p));
    r.t.push_back(t);
    c = c * t * sp + 1.0;
    r.c.push_back(c);
  }
  r.fi = perp_damping_fi(r.t, p);
  return r;
}

double perp_damping_fi(const std::vector<double>& t, double p) {
  const double sp = std::sqrt(p);
  double c = 1.0, fi = 0.0;
  for (double ti : t) {
    fi += c * c * (1.0 - ti * ti);
    c = c * ti * sp + 1.0;
  }
  return fi + c * c;
}

std::vector<std::size_t> KrausStrategy::ancilla_dims() const {
  std::vector<std::size_t> d;
  for (const auto& k : teeth) {
    if (k.d_out % d_probe != 0) throw std::invalid_argument("KrausStrategy: tooth output is not probe x ancilla");
    d.push_back(k.d_out / d_probe);
  }
  return d;
}

KrausStrategy repaired(const KrausStrategy& ks) {
  KrausStrategy out = ks;
  for (auto& k : out.teeth) {
    ComplexMatrix s = ComplexMatrix::Zero(k.d_in, k.d_in);
    for (const auto& op : k.operators) s += op.adjoint() * op;
    const auto e = herm_eig(hermitian_part(s), 1.0);
    ComplexMatrix inv_sqrt = ComplexMatrix::Zero(k.d_in, k.d_in);
    for (Eigen::Index i = 0; i < e.values.size(); ++i)
      if (e.values(i) > 1e-12) inv_sqrt += e.vectors.col(i) * e.vectors.col(i).adjoint() / std::sqrt(e.values(i));
    for (auto& op : k.operators) op = op * inv_sqrt;
  }
  return out;
}

Strategy strategy_from_kraus(const KrausStrategy& ks) {
  const std::size_t N = ks.N();
  if (N == 0) throw std::invalid_argument("strategy_from_kraus: no teeth");
  const auto dA = ks.ancilla_dims();
  if (ks.teeth[0].d_in != 1) throw std::invalid_argument("strategy_from_kraus: first tooth must have a trivial input");
  for (std::size_t k = 2; k <= N; ++k)
    if (ks.teeth[k - 1].d_in != ks.d_probe * dA[k - 2])
      throw std::invalid_argument("strategy_from_kraus: tooth " + std::to_string(k) + " input does not match the previous ancilla");
  Strategy s = random_strategy(N, ks.d_probe, dA, 0);
  for (std::size_t k = 1; k <= N; ++k) s.teeth[k - 1] = tooth_from_kraus(s, k, ks.teeth[k - 1]);
  return s;
}

double evaluate_fixed_strategy(const KrausStrategy& ks, const NoiseModelSpec& model, std::size_t N, double phi) {
  if (ks.N() != N) throw std::invalid_argument("evaluate_fixed_strategy: strategy has " + std::to_string(ks.N()) + " teeth, expected " + std::to_string(N));
  return strategy_qfi(strategy_from_kraus(ks), model, phi);
}

KrausStrategy damping_fixture_one_qubit() {
  KrausStrategy ks;
  ks.name = "parallel-damping-p0.5-one-qubit";
  ks.teeth.push_back(state_tooth(0.678 * bits("00") + 0.735 * bits("11")));
  const ComplexMatrix U = 0.959 * outer(bits("00"), bits("00")) + cplx(-0.282, -0.002) * outer(bits("00"), bits("11")) +
                          cplx(0.278, 0.047) * outer(bits("11"), bits("00")) + cplx(0.945, 0.166) * outer(bits("11"), bits("11"));
  const Eigen::VectorXcd psi1 = 0.590 * bits("00") + cplx(0.800, 0.105) * bits("11");
  ks.teeth.push_back(tooth({U * (outer(bits("00"), bits("00")) + outer(bits("11"), bits("11"))),
                            outer(psi1, bits("01")), outer(bits("10"), bits("10"))}));
  return repaired(ks);
}

KrausStrategy damping_fixture_two_qubit() {
  KrausStrategy ks;
  ks.name = "parallel-damping-p0.5-two-qubit";
  ks.teeth.push_back(state_tooth(0.675 * bits("000") + 0.738 * bits("111")));
  const Eigen::VectorXcd psi1 = -0.956 * bits("000") + cplx(-0.160, -0.248) * bits("101");
  const Eigen::VectorXcd psi2 = 0.295 * bits("000") + cplx(-0.519, -0.803) * bits("101");
  const Eigen::VectorXcd psi3 = 0.062 * bits("000") + cplx(-0.041, 0.519) * bits("010") + cplx(0.289, 0.237) * bits("011") +
                                cplx(0.042, 0.065) * bits("101") + cplx(0.370, 0.247) * bits("110") +
                                cplx(-0.580, 0.225) * bits("111");
  std::vector<ComplexMatrix> ops{outer(psi1, bits("000")) + outer(psi2, bits("111")), outer(psi3, bits("011"))};
  for (const char* s : {"001", "010", "100", "101", "110"}) ops.push_back(outer(bits(s), bits(s)));
  ks.teeth.push_back(tooth(std::move(ops)));
  return repaired(ks);
}

KrausStrategy perp_dephasing_n3(double p) {
  check_p(p, "perp_dephasing_n3");
  if (p < 0.5) {
    // The channel at p equals X after the channel at 1-p with phi -> -phi; undo that X in each tooth.
    KrausStrategy ks = perp_dephasing_n3(1.0 - p);
    const ComplexMatrix x1 = kron(pauli_x(), identity(2));
    for (std::size_t k = 1; k < ks.teeth.size(); ++k)
      for (auto& op : ks.teeth[k].operators) op = op * x1;
    return ks;
  }
  KrausStrategy ks;
  ks.name = "perp-dephasing-n3";
  ks.teeth.push_back(state_tooth((bits("00") + bits("11")) / std::sqrt(2.0)));
  const ComplexMatrix pc = outer(bits("00"), bits("00")) + outer(bits("11"), bits("11"));
  const ComplexMatrix pe = outer(bits("01"), bits("01")) + outer(bits("10"), bits("10"));
  // Flipping the ancilla keeps the phase of the error branch coherent with the clean one.
  ks.teeth.push_back(tooth({pc, kron(identity(2), pauli_x()) * pe}));
  const Eigen::VectorXcd chi = kron(ComplexMatrix(bits("0") + bits("1")),
                                    ComplexMatrix(bits("0") + std::exp(-kI * std::numbers::pi / 4.0) * bits("1"))) / 2.0;
  ks.teeth.push_back(tooth({pc, outer(chi, bits("01")), outer(chi, bits("10"))}));
  return ks;
}

KrausStrategy plus_state_identity(std::size_t N) {
  KrausStrategy ks;
  ks.name = "plus-identity";
  ks.teeth.push_back(state_tooth((bits("0") + bits("1")) / std::sqrt(2.0)));
  for (std::size_t k = 2; k <= N; ++k) ks.teeth.push_back(tooth({identity(2)}));
  return ks;
}

}  // namespace qcomb
