#include "qcomb/strategy.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace qcomb {

namespace {

ComplexMatrix haar_isometry(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  if (rows < cols) throw std::invalid_argument("haar_isometry: rows must be >= cols");
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix a(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) a(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<ComplexMatrix> qr(a);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(rows, cols);
  const ComplexMatrix r = qr.matrixQR();
  for (std::size_t j = 0; j < cols; ++j) {
    const double m = std::abs(r(j, j));
    if (m > 0) q.col(j) *= r(j, j) / m;
  }
  return q;
}

void check_slot(const Strategy& s, std::size_t k) {
  if (k < 1 || k > s.N) throw std::out_of_range("strategy: tooth index out of range");
}

}  // namespace

std::vector<Label> Strategy::tooth_inputs(std::size_t k) const {
  check_slot(*this, k);
  if (k == 1) return {};
  return operator_labels({{label_A(k - 1), ancilla_dim(k - 1)}, {label_K(k - 1), d_probe}});
}

std::vector<Label> Strategy::tooth_outputs(std::size_t k) const {
  check_slot(*this, k);
  return operator_labels({{label_H(k), d_probe}, {label_A(k), ancilla_dim(k)}});
}

std::vector<Label> Strategy::tooth_labels(std::size_t k) const {
  auto l = tooth_inputs(k);
  const auto o = tooth_outputs(k);
  l.insert(l.end(), o.begin(), o.end());
  return l;
}

std::vector<std::string> Strategy::tooth_order(std::size_t k) const {
  std::vector<std::string> names;
  for (const auto& l : tooth_labels(k)) names.push_back(l.name);
  return names;
}

ComplexMatrix Strategy::tooth_matrix(std::size_t k) const { return teeth.at(k - 1).to_operator(tooth_order(k)); }

void Strategy::set_tooth(std::size_t k, const ComplexMatrix& m) {
  teeth.at(k - 1) = LabeledTensor::from_operator(tooth_labels(k), m);
}

StrategyCheck validate_strategy(const Strategy& s, double tol) {
  if (s.teeth.size() != s.N || s.d_A.size() != s.N) throw std::invalid_argument("strategy: inconsistent sizes");
  StrategyCheck c;
  for (std::size_t k = 1; k <= s.N; ++k) {
    const ComplexMatrix m = s.tooth_matrix(k);
    const auto e = herm_eig(hermitian_part(m), 1.0);
    c.max_psd_violation = std::max(c.max_psd_violation, std::max(0.0, -e.values(0)));
    double res = 0;
    if (k == 1) {
      res = std::abs(m.trace() - cplx(1.0));
    } else {
      std::vector<std::string> outs;
      for (const auto& l : s.tooth_outputs(k)) outs.push_back(l.name);
      const LabeledTensor t = partial_trace(s.teeth[k - 1], outs);
      const ComplexMatrix tm = t.to_operator({label_A(k - 1), label_K(k - 1)});
      res = (tm - ComplexMatrix::Identity(tm.rows(), tm.cols())).norm();
    }
    c.max_constraint_residual = std::max(c.max_constraint_residual, res);
  }
  c.ok = c.max_psd_violation <= tol && c.max_constraint_residual <= tol;
  return c;
}

ComplexMatrix haar_isometry(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return haar_isometry(rows, cols, rng);
}

LabeledTensor tooth_from_kraus(const Strategy& shape, std::size_t k, const KrausSet& kraus) {
  std::vector<Label> in;
  if (k > 1) in = operator_labels({{label_K(k - 1), shape.d_probe}, {label_A(k - 1), shape.ancilla_dim(k - 1)}});
  const auto out = shape.tooth_outputs(k);
  return kraus_to_choi(kraus, out, in).tensor.permuted(shape.tooth_order(k));
}

Strategy random_strategy(std::size_t N, std::size_t d_probe, const std::vector<std::size_t>& d_A, std::uint64_t seed) {
  if (N == 0) throw std::invalid_argument("random_strategy: N must be positive");
  if (d_A.size() != N) throw std::invalid_argument("random_strategy: need one ancilla dimension per tooth");
  for (auto d : d_A)
    if (d == 0) throw std::invalid_argument("random_strategy: ancilla dimension must be positive");
  Strategy s;
  s.N = N;
  s.d_probe = d_probe;
  s.d_A = d_A;
  std::mt19937_64 rng(seed);
  for (std::size_t k = 1; k <= N; ++k) {
    const std::size_t d_in = k == 1 ? 1 : d_A[k - 2] * d_probe;
    const std::size_t d_out = d_probe * d_A[k - 1];
    const std::size_t r = (d_in + d_out - 1) / d_out;
    const ComplexMatrix w = haar_isometry(d_out * r, d_in, rng);
    KrausSet ks;
    ks.d_in = d_in;
    ks.d_out = d_out;
    for (std::size_t j = 0; j < r; ++j) {
      ComplexMatrix op(d_out, d_in);
      for (std::size_t o = 0; o < d_out; ++o) op.row(o) = w.row(o * r + j);
      ks.operators.push_back(op);
    }
    s.teeth.push_back(tooth_from_kraus(s, k, ks));
  }
  return s;
}

Strategy random_strategy(std::size_t N, std::size_t d_probe, std::size_t d_A, std::uint64_t seed) {
  return random_strategy(N, d_probe, std::vector<std::size_t>(N, d_A), seed);
}

LeftPair left_step(const LeftPair& prev, const LabeledTensor& tooth, const ChannelEvaluation& channel) {
  LeftPair out;
  out.empty = false;
  if (prev.empty) {
    out.zero = contract(tooth, channel.choi.tensor);
    out.plus = contract(tooth, channel.derivative);
    return out;
  }
  const LabeledTensor t = contract(prev.zero, tooth);
  out.zero = contract(t, channel.choi.tensor);
  out.plus = contract(contract(prev.plus, tooth), channel.choi.tensor);
  out.plus += contract(t, channel.derivative);
  return out;
}

std::vector<std::string> output_order(const Strategy& s) { return {label_K(s.N), label_A(s.N)}; }

namespace {

LeftPair full_left(const Strategy& s, const std::vector<ChannelEvaluation>& channels) {
  if (channels.size() != s.N) throw std::invalid_argument("strategy: need one channel evaluation per slot");
  LeftPair left;
  for (std::size_t k = 1; k <= s.N; ++k) left = left_step(left, s.teeth[k - 1], channels[k - 1]);
  return left;
}

}  // namespace

LabeledTensor compute_output_state(const Strategy& s, const std::vector<ChannelEvaluation>& channels) {
  return full_left(s, channels).zero.permuted(output_order(s));
}

LabeledTensor compute_output_derivative(const Strategy& s, const std::vector<ChannelEvaluation>& channels) {
  return full_left(s, channels).plus.permuted(output_order(s));
}

StatePair compute_output_pair(const Strategy& s, const std::vector<ChannelEvaluation>& channels) {
  const LeftPair left = full_left(s, channels);
  const auto order = output_order(s);
  return {hermitian_part(left.zero.to_operator(order)), hermitian_part(left.plus.to_operator(order))};
}

double strategy_qfi(const Strategy& s, const NoiseModelSpec& model, double phi) {
  return qfi_of_state(compute_output_pair(s, evaluate_chain(channel_chain(model, s.N), phi, 0.0)));
}

}  // namespace qcomb
