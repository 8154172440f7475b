#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcomb/channels.hpp"
#include "qcomb/sld.hpp"
#include "qcomb/tensor.hpp"

namespace qcomb {

// Teeth P_1 on (H_1, A_1) and P_k on (A_{k-1}, K_{k-1}, H_k, A_k); inputs precede outputs.
struct Strategy {
  std::size_t N = 0;
  std::size_t d_probe = 2;
  std::vector<std::size_t> d_A;  // d_A[k-1] = dim A_k
  std::vector<LabeledTensor> teeth;

  std::size_t ancilla_dim(std::size_t k) const { return d_A.at(k - 1); }
  std::vector<Label> tooth_inputs(std::size_t k) const;
  std::vector<Label> tooth_outputs(std::size_t k) const;
  std::vector<Label> tooth_labels(std::size_t k) const;
  std::vector<std::string> tooth_order(std::size_t k) const;
  ComplexMatrix tooth_matrix(std::size_t k) const;
  void set_tooth(std::size_t k, const ComplexMatrix& m);
};

struct StrategyCheck {
  double max_psd_violation = 0;
  double max_constraint_residual = 0;
  bool ok = true;
};

StrategyCheck validate_strategy(const Strategy& s, double tol = 1e-8);

// Teeth are Choi operators of Haar-random isometries (a random Stinespring dilation when
// the output is smaller than the input). Deterministic in the seed.
Strategy random_strategy(std::size_t N, std::size_t d_probe, const std::vector<std::size_t>& d_A, std::uint64_t seed);
Strategy random_strategy(std::size_t N, std::size_t d_probe, std::size_t d_A, std::uint64_t seed);

ComplexMatrix haar_isometry(std::size_t rows, std::size_t cols, std::uint64_t seed);

// Tooth from Kraus operators mapping (K_{k-1}, A_{k-1}) to (H_k, A_k), probe first on both sides.
LabeledTensor tooth_from_kraus(const Strategy& shape, std::size_t k, const KrausSet& kraus);

// Output state on (K_N, A_N) and its phi-derivative, contracted left to right.
LabeledTensor compute_output_state(const Strategy& s, const std::vector<ChannelEvaluation>& channels);
LabeledTensor compute_output_derivative(const Strategy& s, const std::vector<ChannelEvaluation>& channels);
StatePair compute_output_pair(const Strategy& s, const std::vector<ChannelEvaluation>& channels);
std::vector<std::string> output_order(const Strategy& s);

double strategy_qfi(const Strategy& s, const NoiseModelSpec& model, double phi = 0.0);

}  // namespace qcomb

namespace qcomb {

// Left environment after k slots on (A_k, K_k[, E_k]): the zero-derivative family and the
// sum of single-derivative contractions. An empty pair stands for the scalars 1 and 0.
struct LeftPair {
  LabeledTensor zero;
  LabeledTensor plus;
  bool empty = true;
};

LeftPair left_step(const LeftPair& prev, const LabeledTensor& tooth, const ChannelEvaluation& channel);

}  // namespace qcomb
