#pragma once

#include <vector>

#include "qcomb/channels.hpp"
#include "qcomb/sdp.hpp"
#include "qcomb/sld.hpp"

namespace qcomb {

// Kraus operators K_k and derivatives of a single channel use; h acts on the Kraus index.
struct MopProblem {
  std::vector<ComplexMatrix> kraus;
  std::vector<ComplexMatrix> derivative;

  std::size_t rank() const { return kraus.size(); }
  std::size_t d_in() const;
  std::size_t d_out() const;
  void validate() const;
};

MopProblem mop_problem(const NoiseModelSpec& model, double phi = 0.0);

// Kdot_k(h) = Kdot_k - i sum_l h_kl K_l and alpha(h) = sum_k Kdot_k(h)^dag Kdot_k(h).
std::vector<ComplexMatrix> shifted_derivative(const MopProblem& m, const ComplexMatrix& h);
ComplexMatrix mop_alpha(const MopProblem& m, const ComplexMatrix& h);

struct MopResult {
  double qfi = 0;
  ComplexMatrix h;
  double lambda = 0;
  sdp::Status status = sdp::Status::NumericalFailure;
  double gap = 0;
};

MopResult channel_qfi_mop(const MopProblem& m, const sdp::Options& options = {});

struct OptimalInput {
  ComplexMatrix rho;
  double value = 0;        // <alpha(h), rho>
  double norm_alpha = 0;   // largest eigenvalue of alpha(h)
  double max_gradient = 0;
  sdp::Status status = sdp::Status::NumericalFailure;
  bool loosened = false;
};

OptimalInput optimal_input_state(const MopProblem& m, const ComplexMatrix& h, const sdp::Options& options = {});

// Channel applied to the purification sum_i sqrt(w_i) |v_i>|i> of rho, on (out, reference).
StatePair apply_to_purification(const MopProblem& m, const ComplexMatrix& rho);

}  // namespace qcomb
