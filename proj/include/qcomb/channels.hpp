#pragma once

#include <string>
#include <vector>

#include "qcomb/tensor.hpp"

namespace qcomb {

enum class NoiseVariant { DephasingParallel, DephasingPerp, DampingParallel, DampingPerp, CorrelatedDephasing };

std::string to_string(NoiseVariant v);
NoiseVariant parse_variant(const std::string& name);

struct NoiseModelSpec {
  NoiseVariant variant = NoiseVariant::DephasingParallel;
  double p = 1.0;
  double C = 0.0;  // register correlation, CorrelatedDephasing only

  void validate() const;
  bool correlated() const { return variant == NoiseVariant::CorrelatedDephasing; }
};

// Label names used across the library: probe input H_k, probe output K_k, ancilla A_k, register E_k.
std::string label_H(std::size_t k);
std::string label_K(std::size_t k);
std::string label_A(std::size_t k);
std::string label_E(std::size_t k);

struct KrausSet {
  std::vector<ComplexMatrix> operators;
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  bool relaxed = false;  // allows non-trace-preserving blocks

  double completeness_residual() const;
  void validate(double tol = 1e-10) const;
};

enum class ChoiRole { State, Channel, Tooth };

struct ChoiOperator {
  LabeledTensor tensor;
  ChoiRole role = ChoiRole::Channel;
  std::vector<std::string> outputs;

  std::vector<std::string> inputs() const;
};

struct ChoiCheck {
  double min_eigenvalue = 0;
  double trace_preservation_residual = 0;
  double trace_residual = 0;
  bool psd = true;
  bool ok = true;
};

ChoiCheck check_choi(const ChoiOperator& c);

// |K> = sum_ij K_ij |i>_out |j>_in; the operator lives on out labels followed by in labels.
ChoiOperator kraus_to_choi(const KrausSet& k, const std::vector<Label>& out, const std::vector<Label>& in);
LabeledTensor kraus_pair_to_choi_derivative(const KrausSet& k, const KrausSet& dk, const std::vector<Label>& out,
                                            const std::vector<Label>& in);
KrausSet choi_to_kraus(const ChoiOperator& c, double cutoff = 1e-10);

ChoiOperator link_product(const ChoiOperator& a, const ChoiOperator& b, const std::vector<std::string>& common);
ChoiOperator mix_depolarizing(const ChoiOperator& c, double q);

ComplexMatrix phase_unitary(double phi);
ComplexMatrix pauli_x();
ComplexMatrix pauli_y();
ComplexMatrix pauli_z();

enum class ChannelPosition { Single, First, Middle, Last };

struct ChannelEvaluation {
  ChoiOperator choi;
  LabeledTensor derivative;
};

class ParamChannel {
 public:
  ParamChannel(NoiseModelSpec model, ChannelPosition position, std::size_t slot);

  const NoiseModelSpec& model() const { return model_; }
  ChannelPosition position() const { return position_; }
  std::size_t slot() const { return slot_; }
  bool has_register_in() const;
  bool has_register_out() const;
  std::vector<Label> input_labels() const;
  std::vector<Label> output_labels() const;

  KrausSet kraus(double phi) const;
  KrausSet kraus_derivative(double phi) const;
  // Choi operator and its phi-derivative, optionally mixed with depolarizing noise of strength q.
  ChannelEvaluation evaluate(double phi, double q = 0.0) const;
  ParamChannel at_slot(std::size_t k) const { return ParamChannel(model_, position_, k); }

 private:
  KrausSet noise_kraus() const;

  NoiseModelSpec model_;
  ChannelPosition position_;
  std::size_t slot_;
};

// Single use of the model: the uncorrelated channel, or the middle channel (probe and register) when correlated.
ChannelEvaluation channel_with_phase(const NoiseModelSpec& model, double phi);

struct CorrelatedTriple {
  ParamChannel first;
  ParamChannel middle;
  ParamChannel last;
};
CorrelatedTriple correlated_first_and_last(const NoiseModelSpec& model);

// The channels probed by an N-slot strategy, with register wiring for the correlated model.
std::vector<ParamChannel> channel_chain(const NoiseModelSpec& model, std::size_t N);
std::vector<ChannelEvaluation> evaluate_chain(const std::vector<ParamChannel>& chain, double phi, double q = 0.0);

// Correlated model: rotation angle of the register-controlled unitaries for a given marginal p.
double correlated_epsilon(double p);

}  // namespace qcomb
