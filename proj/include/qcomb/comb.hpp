#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcomb/analytic.hpp"
#include "qcomb/channels.hpp"
#include "qcomb/sdp.hpp"
#include "qcomb/sld.hpp"
#include "qcomb/strategy.hpp"

namespace qcomb {

// Full comb on H_1, K_1, ..., H_{N-1}, K_{N-1}, H_N, A_N.
struct Comb {
  std::size_t N = 0;
  std::size_t d_probe = 2;
  std::size_t d_out_ancilla = 1;  // dim A_N
  LabeledTensor P;

  std::vector<Label> labels() const;
  std::vector<std::string> order() const;
  ComplexMatrix matrix() const { return P.to_operator(order()); }
  static Comb from_matrix(std::size_t N, std::size_t d_probe, std::size_t d_out_ancilla, const ComplexMatrix& m);
};

struct CombReport {
  std::vector<double> level_residuals;  // index k-1: the condition that traces out tooth k
  double trace_residual = 0;
  double min_eigenvalue = 0;
  double max_residual = 0;
  bool psd = true;
  bool ok = true;
};

CombReport validate_comb(const Comb& c, double tol = 1e-7);

Comb link_strategy(const Strategy& s);

// Lambda^(N) on (K_1..K_N, H_1..H_N) with registers contracted, and its phi-derivative.
struct ChannelComb {
  std::size_t N = 0;
  LabeledTensor choi;
  LabeledTensor derivative;
};

ChannelComb channel_comb(const NoiseModelSpec& model, std::size_t N, double phi = 0.0, double q = 0.0);
StatePair comb_output(const Comb& c, const ChannelComb& lambda);

// Equality constraints of a comb as an SDP over a single block in the order of Comb::order().
sdp::Problem comb_constraint_problem(std::size_t N, std::size_t d_probe, std::size_t d_out_ancilla);

inline constexpr std::size_t kMaxCombDim = 4096;

struct FullCombConfig {
  std::size_t d_out_ancilla = 4;
  int max_iters = 200;
  double threshold = 1e-4;
  int window = 5;
  std::uint64_t seed = 1;
  sdp::Options sdp;
};

struct FullCombResult {
  double qfi = 0;
  Comb comb;
  ComplexMatrix L;
  std::vector<double> trace;  // objective after each P step and each L step
  int iterations = 0;
  bool converged = false;
  std::string status;
};

FullCombResult iss_full_comb(const ChannelComb& lambda, std::size_t d_probe, const FullCombConfig& config);

struct IsometrySequence {
  std::size_t N = 0;
  std::size_t d_probe = 2;
  std::size_t d_out_ancilla = 1;
  // V[k-1] maps (A_{k-1}, K_{k-1}) to (H_k, A_k); the last one maps to (H_N, A_N, R) where R purifies P.
  std::vector<ComplexMatrix> V;
  std::vector<std::size_t> ancilla_dims;  // rank of P^(k) for k < N, then dim R
  double residual = 0;
  bool rank_ambiguous = false;
};

IsometrySequence decompose_to_isometries(const Comb& c, double cutoff = 1e-9);
Comb reconstruct(const IsometrySequence& seq);
double max_isometry_defect(const IsometrySequence& seq);
// The isometries as a protocol: one Kraus operator per tooth, the last split over the purifying index R.
// Teeth are passed through repaired() to absorb the least-squares defect.
KrausStrategy to_kraus_strategy(const IsometrySequence& seq);

// Conjugates the A_k output of P_k by U and the A_k input of P_{k+1} by conj(U).
// For k = N only the output ancilla rotates, so P changes but the QFI does not.
Strategy apply_gauge(const Strategy& s, std::size_t k, const ComplexMatrix& U);

}  // namespace qcomb
