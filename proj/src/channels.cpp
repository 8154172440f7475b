#include "qcomb/channels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qcomb {

namespace {

const cplx I(0.0, 1.0);

ComplexMatrix ket_bra(std::size_t d_out, std::size_t i, std::size_t d_in, std::size_t j) {
  ComplexMatrix m = ComplexMatrix::Zero(d_out, d_in);
  m(i, j) = 1.0;
  return m;
}

ComplexMatrix plus_minus_projector(int sign_out, int sign_in) {
  // |s_out><s_in| in the sigma_x eigenbasis, |+-> = (|0> +- |1>)/sqrt(2)
  ComplexVector a(2), b(2);
  a << 1.0, static_cast<double>(sign_out);
  b << 1.0, static_cast<double>(sign_in);
  return a * b.adjoint() * 0.5;
}

ComplexVector vectorize(const ComplexMatrix& k) {
  ComplexVector v(k.rows() * k.cols());
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j) v(i * k.cols() + j) = k(i, j);
  return v;
}

std::vector<Label> concat(const std::vector<Label>& a, const std::vector<Label>& b) {
  std::vector<Label> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::size_t dims_product(const std::vector<Label>& labels) {
  std::size_t d = 1;
  for (const auto& l : labels) d *= l.dim;
  return d;
}

}  // namespace

std::string to_string(NoiseVariant v) {
  switch (v) {
    case NoiseVariant::DephasingParallel: return "DephasingParallel";
    case NoiseVariant::DephasingPerp: return "DephasingPerp";
    case NoiseVariant::DampingParallel: return "DampingParallel";
    case NoiseVariant::DampingPerp: return "DampingPerp";
    case NoiseVariant::CorrelatedDephasing: return "CorrelatedDephasing";
  }
  return "unknown";
}

NoiseVariant parse_variant(const std::string& name) {
  for (auto v : {NoiseVariant::DephasingParallel, NoiseVariant::DephasingPerp, NoiseVariant::DampingParallel,
                 NoiseVariant::DampingPerp, NoiseVariant::CorrelatedDephasing})
    if (to_string(v) == name) return v;
  throw std::invalid_argument("unknown noise model " + name);
}

void NoiseModelSpec::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("noise parameter p must lie in [0,1]");
  if (!(C >= -1.0 && C <= 1.0)) throw std::invalid_argument("correlation C must lie in [-1,1]");
}

std::string label_H(std::size_t k) { return "H" + std::to_string(k); }
std::string label_K(std::size_t k) { return "K" + std::to_string(k); }
std::string label_A(std::size_t k) { return "A" + std::to_string(k); }
std::string label_E(std::size_t k) { return "E" + std::to_string(k); }

double KrausSet::completeness_residual() const {
  ComplexMatrix s = ComplexMatrix::Zero(d_in, d_in);
  for (const auto& k : operators) s += k.adjoint() * k;
  return (s - ComplexMatrix::Identity(d_in, d_in)).norm();
}

void KrausSet::validate(double tol) const {
  for (const auto& k : operators)
    if (static_cast<std::size_t>(k.rows()) != d_out || static_cast<std::size_t>(k.cols()) != d_in)
      throw std::invalid_argument("KrausSet: operator shape does not match d_out x d_in");
  if (!relaxed && completeness_residual() > tol) throw std::invalid_argument("KrausSet: completeness violated");
}

std::vector<std::string> ChoiOperator::inputs() const {
  std::vector<std::string> in;
  for (const auto& l : tensor.labels())
    if (std::find(outputs.begin(), outputs.end(), l.name) == outputs.end()) in.push_back(l.name);
  return in;
}

ChoiCheck check_choi(const ChoiOperator& c) {
  ChoiCheck r;
  const ComplexMatrix m = c.tensor.to_operator();
  const double scale = std::max(1.0, m.norm());
  const auto eig = herm_eig(hermitian_part(m), 1.0);
  r.min_eigenvalue = eig.values.size() ? eig.values(0) : 0.0;
  r.psd = r.min_eigenvalue >= -1e-9 * scale;
  r.ok = r.psd;
  if (c.role == ChoiRole::State) {
    r.trace_residual = std::abs(m.trace() - 1.0);
    r.ok = r.ok && r.trace_residual <= 1e-10;
  } else {
    const auto in = c.inputs();
    const LabeledTensor reduced = partial_trace(c.tensor, c.outputs);
    std::vector<Label> in_labels;
    for (const auto& n : in) in_labels.push_back(c.tensor.label(n));
    const ComplexMatrix id = ComplexMatrix::Identity(dims_product(in_labels), dims_product(in_labels));
    r.trace_preservation_residual = (reduced.to_operator(in) - id).norm();
    r.ok = r.ok && r.trace_preservation_residual <= 1e-8;
  }
  return r;
}

ChoiOperator kraus_to_choi(const KrausSet& k, const std::vector<Label>& out, const std::vector<Label>& in) {
  if (dims_product(out) != k.d_out || dims_product(in) != k.d_in)
    throw std::invalid_argument("kraus_to_choi: labels do not match Kraus dimensions");
  const std::size_t d = k.d_out * k.d_in;
  ComplexMatrix choi = ComplexMatrix::Zero(d, d);
  for (const auto& op : k.operators) {
    const ComplexVector v = vectorize(op);
    choi += v * v.adjoint();
  }
  ChoiOperator c;
  c.tensor = LabeledTensor::from_operator(concat(out, in), choi);
  c.role = in.empty() ? ChoiRole::State : ChoiRole::Channel;
  for (const auto& l : out) c.outputs.push_back(l.name);
  return c;
}

LabeledTensor kraus_pair_to_choi_derivative(const KrausSet& k, const KrausSet& dk, const std::vector<Label>& out,
                                            const std::vector<Label>& in) {
  if (k.operators.size() != dk.operators.size())
    throw std::invalid_argument("Kraus derivative set has a different length");
  const std::size_t d = k.d_out * k.d_in;
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  for (std::size_t i = 0; i < k.operators.size(); ++i) {
    const ComplexVector v = vectorize(k.operators[i]);
    const ComplexVector dv = vectorize(dk.operators[i]);
    m += dv * v.adjoint() + v * dv.adjoint();
  }
  return LabeledTensor::from_operator(concat(out, in), m);
}

KrausSet choi_to_kraus(const ChoiOperator& c, double cutoff) {
  const auto in = c.inputs();
  std::vector<std::string> order = c.outputs;
  order.insert(order.end(), in.begin(), in.end());
  const ComplexMatrix m = c.tensor.to_operator(order);
  const auto eig = herm_eig(m, 1e-10);
  if (eig.values.size() && eig.values(0) < -1e-9 * std::max(1.0, m.norm()))
    throw std::invalid_argument("choi_to_kraus: Choi operator is not positive semidefinite");
  KrausSet k;
  k.d_out = 1;
  for (const auto& n : c.outputs) k.d_out *= c.tensor.label(n).dim;
  k.d_in = static_cast<std::size_t>(m.rows()) / k.d_out;
  for (Eigen::Index e = eig.values.size(); e-- > 0;) {
    if (eig.values(e) < cutoff) break;
    const ComplexVector v = eig.vectors.col(e) * std::sqrt(eig.values(e));
    ComplexMatrix op(k.d_out, k.d_in);
    for (std::size_t i = 0; i < k.d_out; ++i)
      for (std::size_t j = 0; j < k.d_in; ++j) op(i, j) = v(i * k.d_in + j);
    k.operators.push_back(op);
  }
  k.relaxed = c.role != ChoiRole::Channel;
  return k;
}

ChoiOperator link_product(const ChoiOperator& a, const ChoiOperator& b, const std::vector<std::string>& common) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& n : common) {
    if (!a.tensor.has(n) || !b.tensor.has(n)) throw std::invalid_argument("link_product: label " + n + " not shared");
    if (a.tensor.label(n).dim != b.tensor.label(n).dim)
      throw std::invalid_argument("link_product: dimension mismatch on " + n);
    pairs.emplace_back(n, n);
  }
  ChoiOperator out;
  out.tensor = contract(a.tensor, b.tensor, pairs);
  for (const auto* src : {&a.outputs, &b.outputs})
    for (const auto& n : *src)
      if (std::find(common.begin(), common.end(), n) == common.end()) out.outputs.push_back(n);
  out.role = out.inputs().empty() ? ChoiRole::State : ChoiRole::Channel;
  return out;
}

ChoiOperator mix_depolarizing(const ChoiOperator& c, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("mix_depolarizing: q must lie in [0,1]");
  if (q == 0.0) return c;
  std::size_t d_out = 1;
  for (const auto& n : c.outputs) d_out *= c.tensor.label(n).dim;
  ChoiOperator out = c;
  out.tensor *= (1.0 - q);
  LabeledTensor depol = LabeledTensor::identity_operator(c.tensor.labels());
  depol *= q / static_cast<double>(d_out);
  out.tensor += depol;
  return out;
}

ComplexMatrix phase_unitary(double phi) {
  ComplexMatrix u = ComplexMatrix::Zero(2, 2);
  u(0, 0) = std::exp(-I * phi / 2.0);
  u(1, 1) = std::exp(I * phi / 2.0);
  return u;
}

ComplexMatrix pauli_x() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

ComplexMatrix pauli_y() {
  ComplexMatrix m(2, 2);
  m << 0, -I, I, 0;
  return m;
}

ComplexMatrix pauli_z() {
  ComplexMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

double correlated_epsilon(double p) { return 2.0 * std::acos(std::sqrt(p)); }

ParamChannel::ParamChannel(NoiseModelSpec model, ChannelPosition position, std::size_t slot)
    : model_(model), position_(position), slot_(slot) {
  model_.validate();
  if (!model_.correlated() && position_ != ChannelPosition::Single)
    throw std::invalid_argument("register positions apply to the correlated model only");
}

bool ParamChannel::has_register_in() const {
  return position_ == ChannelPosition::Middle || position_ == ChannelPosition::Last;
}

bool ParamChannel::has_register_out() const {
  return position_ == ChannelPosition::First || position_ == ChannelPosition::Middle;
}

std::vector<Label> ParamChannel::input_labels() const {
  std::vector<Label> in{{label_H(slot_), 2, true}};
  if (has_register_in()) in.push_back({label_E(slot_ - 1), 2, true});
  return in;
}

std::vector<Label> ParamChannel::output_labels() const {
  std::vector<Label> out{{label_K(slot_), 2, true}};
  if (has_register_out()) out.push_back({label_E(slot_), 2, true});
  return out;
}

KrausSet ParamChannel::noise_kraus() const {
  const double p = model_.p;
  KrausSet k;
  const ComplexMatrix id = identity(2);
  switch (model_.variant) {
    case NoiseVariant::DephasingPerp:
      k.operators = {std::sqrt(p) * id, std::sqrt(1 - p) * pauli_x()};
      break;
    case NoiseVariant::DephasingParallel:
      k.operators = {std::sqrt(p) * id, std::sqrt(1 - p) * pauli_z()};
      break;
    case NoiseVariant::DampingPerp:
      k.operators = {plus_minus_projector(-1, -1) + std::sqrt(p) * plus_minus_projector(1, 1),
                     std::sqrt(1 - p) * plus_minus_projector(-1, 1)};
      break;
    case NoiseVariant::DampingParallel:
      k.operators = {ket_bra(2, 0, 2, 0) + std::sqrt(p) * ket_bra(2, 1, 2, 1), std::sqrt(1 - p) * ket_bra(2, 0, 2, 1)};
      break;
    case NoiseVariant::CorrelatedDephasing: {
      const double eps = correlated_epsilon(p);
      // Register state |+> is stored as |0>, |-> as |1>; s = 0 rotates by +eps, s = 1 by -eps.
      const ComplexMatrix rot[2] = {phase_unitary(eps), phase_unitary(-eps)};
      const double w_same = std::sqrt((1 + model_.C) / 2), w_flip = std::sqrt((1 - model_.C) / 2);
      auto weight = [&](std::size_t s_in, std::size_t s_out) { return s_in == s_out ? w_same : w_flip; };
      switch (position_) {
        case ChannelPosition::Single:
          for (std::size_t s = 0; s < 2; ++s) k.operators.push_back(rot[s] / std::sqrt(2.0));
          break;
        case ChannelPosition::First:
          for (std::size_t s_in = 0; s_in < 2; ++s_in)
            for (std::size_t s_out = 0; s_out < 2; ++s_out)
              if (weight(s_in, s_out) > 0)
                k.operators.push_back(weight(s_in, s_out) / std::sqrt(2.0) * kron(rot[s_in], ket_bra(2, s_out, 1, 0)));
          break;
        case ChannelPosition::Middle:
          for (std::size_t s_in = 0; s_in < 2; ++s_in)
            for (std::size_t s_out = 0; s_out < 2; ++s_out)
              if (weight(s_in, s_out) > 0)
                k.operators.push_back(weight(s_in, s_out) * kron(rot[s_in], ket_bra(2, s_out, 2, s_in)));
          break;
        case ChannelPosition::Last:
          for (std::size_t s_in = 0; s_in < 2; ++s_in) k.operators.push_back(kron(rot[s_in], ket_bra(1, 0, 2, s_in)));
          break;
      }
      break;
    }
  }
  k.d_out = static_cast<std::size_t>(k.operators.front().rows());
  k.d_in = static_cast<std::size_t>(k.operators.front().cols());
  return k;
}

KrausSet ParamChannel::kraus(double phi) const {
  KrausSet k = noise_kraus();
  const ComplexMatrix u = kron(phase_unitary(phi), identity(k.d_out / 2));
  for (auto& op : k.operators) op = u * op;
  return k;
}

KrausSet ParamChannel::kraus_derivative(double phi) const {
  KrausSet k = kraus(phi);
  const ComplexMatrix gen = kron(pauli_z(), identity(k.d_out / 2)) * (-I / 2.0);
  for (auto& op : k.operators) op = gen * op;
  k.relaxed = true;
  return k;
}

ChannelEvaluation ParamChannel::evaluate(double phi, double q) const {
  const KrausSet k = kraus(phi);
  const auto out = output_labels(), in = input_labels();
  ChannelEvaluation e{kraus_to_choi(k, out, in), kraus_pair_to_choi_derivative(k, kraus_derivative(phi), out, in)};
  if (q > 0.0) {
    e.choi = mix_depolarizing(e.choi, q);
    e.derivative *= (1.0 - q);
  }
  return e;
}

ChannelEvaluation channel_with_phase(const NoiseModelSpec& model, double phi) {
  const auto pos = model.correlated() ? ChannelPosition::Middle : ChannelPosition::Single;
  return ParamChannel(model, pos, 1).evaluate(phi);
}

CorrelatedTriple correlated_first_and_last(const NoiseModelSpec& model) {
  if (!model.correlated()) throw std::invalid_argument("correlated_first_and_last: model is not correlated");
  return {ParamChannel(model, ChannelPosition::First, 1), ParamChannel(model, ChannelPosition::Middle, 2),
          ParamChannel(model, ChannelPosition::Last, 3)};
}

std::vector<ParamChannel> channel_chain(const NoiseModelSpec& model, std::size_t N) {
  if (N == 0) throw std::invalid_argument("channel_chain: N must be positive");
  std::vector<ParamChannel> chain;
  for (std::size_t k = 1; k <= N; ++k) {
    ChannelPosition pos = ChannelPosition::Single;
    if (model.correlated() && N > 1)
      pos = k == 1 ? ChannelPosition::First : (k == N ? ChannelPosition::Last : ChannelPosition::Middle);
    chain.emplace_back(model, pos, k);
  }
  return chain;
}

std::vector<ChannelEvaluation> evaluate_chain(const std::vector<ParamChannel>& chain, double phi, double q) {
  std::vector<ChannelEvaluation> out;
  out.reserve(chain.size());
  for (const auto& c : chain) out.push_back(c.evaluate(phi, q));
  return out;
}

}  // namespace qcomb
