#pragma once

#include <string>
#include <vector>

#include "qcomb/channels.hpp"
#include "qcomb/strategy.hpp"

namespace qcomb {

double perp_dephasing_qfi2(double p);
double parallel_dephasing_bound(std::size_t N, double p);

struct PerpDampingProtocol {
  std::size_t N = 0;
  double p = 0;
  std::vector<double> t;  // t_1..t_{N-1}
  std::vector<double> c;  // c_1..c_N
  double fi = 0;
};

PerpDampingProtocol perp_damping_optimal(std::size_t N, double p);
// Fisher information of the feedback protocol for given couplings, by the closed-form sum.
double perp_damping_fi(const std::vector<double>& t, double p);

// Tooth k maps (K_{k-1}, A_{k-1}) to (H_k, A_k), probe first on both sides; tooth 1 has a trivial input.
struct KrausStrategy {
  std::string name;
  std::size_t d_probe = 2;
  std::vector<KrausSet> teeth;

  std::size_t N() const { return teeth.size(); }
  std::vector<std::size_t> ancilla_dims() const;
};

// Rescales each tooth by S^{-1/2} on the support of S = sum K^dag K so that rounded
// coefficients give an exactly trace-preserving tooth; normalizes the initial state.
KrausStrategy repaired(const KrausStrategy& ks);

Strategy strategy_from_kraus(const KrausStrategy& ks);
double evaluate_fixed_strategy(const KrausStrategy& ks, const NoiseModelSpec& model, std::size_t N, double phi = 0.0);

// Two-step protocols for parallel damping at p = 0.5 with one and two ancilla qubits, coefficients to three decimals.
KrausStrategy damping_fixture_one_qubit();
KrausStrategy damping_fixture_two_qubit();
// Three-step error-detecting protocol for perpendicular dephasing with a one-qubit ancilla.
KrausStrategy perp_dephasing_n3(double p);
// |+> followed by identity teeth; reaches N^2 on noiseless channels.
KrausStrategy plus_state_identity(std::size_t N);

}  // namespace qcomb
