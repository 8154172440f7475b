#include "qcomb/mop.hpp"

#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace qcomb {

namespace {

const cplx kI(0.0, 1.0);

// D_j[k] = -i sum_l (E_j)_kl K_l for the Hermitian basis E_j of the Kraus index space.
std::vector<std::vector<ComplexMatrix>> generator_directions(const MopProblem& m) {
  std::vector<std::vector<ComplexMatrix>> dirs;
  for (const auto& e : sdp::hermitian_basis(m.rank())) {
    std::vector<ComplexMatrix> dj;
    for (std::size_t k = 0; k < m.rank(); ++k) {
      ComplexMatrix s = ComplexMatrix::Zero(m.d_out(), m.d_in());
      for (std::size_t l = 0; l < m.rank(); ++l)
        if (e(k, l) != cplx(0.0)) s += e(k, l) * m.kraus[l];
      dj.push_back(-kI * s);
    }
    dirs.push_back(std::move(dj));
  }
  return dirs;
}

}  // namespace

std::size_t MopProblem::d_in() const { return kraus.empty() ? 0 : static_cast<std::size_t>(kraus[0].cols()); }
std::size_t MopProblem::d_out() const { return kraus.empty() ? 0 : static_cast<std::size_t>(kraus[0].rows()); }

void MopProblem::validate() const {
  if (kraus.empty()) throw std::invalid_argument("MopProblem: empty Kraus set");
  if (kraus.size() != derivative.size()) throw std::invalid_argument("MopProblem: Kraus and derivative sets differ in length");
  for (std::size_t k = 0; k < kraus.size(); ++k) {
    if (kraus[k].rows() != kraus[0].rows() || kraus[k].cols() != kraus[0].cols() ||
        derivative[k].rows() != kraus[0].rows() || derivative[k].cols() != kraus[0].cols())
      throw std::invalid_argument("MopProblem: inconsistent operator dimensions");
  }
}

MopProblem mop_problem(const NoiseModelSpec& model, double phi) {
  if (model.correlated()) throw std::invalid_argument("mop_problem: correlated model has no single-use channel");
  const ParamChannel ch(model, ChannelPosition::Single, 1);
  MopProblem m;
  m.kraus = ch.kraus(phi).operators;
  m.derivative = ch.kraus_derivative(phi).operators;
  m.validate();
  return m;
}

std::vector<ComplexMatrix> shifted_derivative(const MopProblem& m, const ComplexMatrix& h) {
  std::vector<ComplexMatrix> out = m.derivative;
  for (std::size_t k = 0; k < m.rank(); ++k)
    for (std::size_t l = 0; l < m.rank(); ++l)
      if (h(k, l) != cplx(0.0)) out[k] -= kI * h(k, l) * m.kraus[l];
  return out;
}

ComplexMatrix mop_alpha(const MopProblem& m, const ComplexMatrix& h) {
  ComplexMatrix a = ComplexMatrix::Zero(m.d_in(), m.d_in());
  for (const auto& kd : shifted_derivative(m, h)) a += kd.adjoint() * kd;
  return hermitian_part(a);
}

MopResult channel_qfi_mop(const MopProblem& m, const sdp::Options& options) {
  m.validate();
  const std::size_t r = m.rank(), din = m.d_in(), dout = m.d_out();
  const std::size_t n = din + r * dout;
  // [[lambda 1, Kdot(h)^dag], [Kdot(h), 1]] >= 0 with Kdot(h) stacked over k.
  auto stacked = [&](const std::vector<ComplexMatrix>& blocks) {
    ComplexMatrix s = ComplexMatrix::Zero(n, n);
    for (std::size_t k = 0; k < r; ++k) {
      s.block(din + k * dout, 0, dout, din) = blocks[k];
      s.block(0, din + k * dout, din, dout) = blocks[k].adjoint();
    }
    return s;
  };
  const auto dirs = generator_directions(m);
  sdp::LmiProblem lp;
  lp.block_dims = {n};
  ComplexMatrix m0 = stacked(m.derivative);
  m0.bottomRightCorner(r * dout, r * dout).setIdentity();
  lp.m0 = {m0};
  lp.c = RealVector::Zero(1 + dirs.size());
  lp.c(0) = 1.0;
  ComplexMatrix ml = ComplexMatrix::Zero(n, n);
  ml.topLeftCorner(din, din).setIdentity();
  lp.mi.push_back({ml});
  for (const auto& d : dirs) lp.mi.push_back({stacked(d)});
  const sdp::LmiSolution sol = sdp::solve_lmi(lp, options);
  MopResult res;
  res.status = sol.status;
  res.gap = sol.gap;
  if (sol.status == sdp::Status::Infeasible || sol.status == sdp::Status::NumericalFailure)
    throw std::runtime_error("channel_qfi_mop: SDP failed with status " + sdp::to_string(sol.status));
  if (sol.status != sdp::Status::Optimal) spdlog::warn("channel_qfi_mop: SDP ended with status {}", sdp::to_string(sol.status));
  const auto basis = sdp::hermitian_basis(r);
  res.h = ComplexMatrix::Zero(r, r);
  for (std::size_t j = 0; j < basis.size(); ++j) res.h += sol.x(1 + j) * basis[j];
  // Report the norm at the returned h so that qfi and h are mutually consistent.
  res.lambda = herm_eig(mop_alpha(m, res.h), 1.0).values.maxCoeff();
  res.qfi = 4.0 * res.lambda;
  return res;
}

namespace {

// rho = W sigma W^dag on the eigenspace of alpha within rel_window of its top eigenvalue; the
// gradient conditions become equalities with L1 slacks so that a slightly inexact h stays feasible.
sdp::Solution top_space_input(const std::vector<ComplexMatrix>& grads, const ComplexMatrix& W, const sdp::Options& options) {
  const std::size_t s = static_cast<std::size_t>(W.cols());
  const std::size_t ng = grads.size();
  sdp::Problem p;
  p.block_dims.push_back(s);
  for (std::size_t j = 0; j < 2 * ng; ++j) p.block_dims.push_back(1);
  p.objective.push_back(ComplexMatrix::Zero(s, s));
  for (std::size_t j = 0; j < 2 * ng; ++j) p.objective.push_back(ComplexMatrix::Ones(1, 1));
  sdp::Constraint tr;
  tr.parts.push_back(sdp::sparse_part(0, ComplexMatrix::Identity(s, s)));
  tr.rhs = 1.0;
  p.constraints.push_back(tr);
  for (std::size_t j = 0; j < ng; ++j) {
    sdp::Constraint c;
    c.parts.push_back(sdp::sparse_part(0, hermitian_part(W.adjoint() * grads[j] * W)));
    c.parts.push_back({1 + 2 * j, {{0, 0, 1.0}}, 1});
    c.parts.push_back({2 + 2 * j, {{0, 0, -1.0}}, 1});
    c.rhs = 0.0;
    p.constraints.push_back(std::move(c));
  }
  return sdp::solve(p, options);
}

}  // namespace

OptimalInput optimal_input_state(const MopProblem& m, const ComplexMatrix& h, const sdp::Options& options) {
  m.validate();
  const std::size_t din = m.d_in();
  const ComplexMatrix alpha = mop_alpha(m, h);
  const auto kd = shifted_derivative(m, h);
  std::vector<ComplexMatrix> grads;
  for (const auto& dj : generator_directions(m)) {
    ComplexMatrix g = ComplexMatrix::Zero(din, din);
    for (std::size_t k = 0; k < m.rank(); ++k) g += dj[k].adjoint() * kd[k];
    grads.push_back(g + g.adjoint());
  }
  const auto e = herm_eig(alpha, 1.0);
  OptimalInput out;
  out.norm_alpha = e.values.maxCoeff();
  const double scale = std::max(out.norm_alpha, 1e-12);
  for (double window : {1e-6, 1e-4, 1e-3}) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < e.values.size(); ++i)
      if (e.values(i) >= out.norm_alpha - window * scale) keep.push_back(i);
    ComplexMatrix W(din, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) W.col(j) = e.vectors.col(keep[j]);
    sdp::Options opts = options;
    if (window > 1e-6) {
      opts.feas_tol = std::max(opts.feas_tol, 1e-6);
      opts.gap_tol = std::max(opts.gap_tol, 1e-6);
      out.loosened = true;
    }
    const sdp::Solution sol = top_space_input(grads, W, opts);
    out.status = sol.status;
    if (sol.status == sdp::Status::Infeasible || sol.status == sdp::Status::NumericalFailure) continue;
    out.rho = hermitian_part(W * sol.X[0] * W.adjoint());
    out.rho /= out.rho.trace().real();
    out.value = (alpha * out.rho).trace().real();
    out.max_gradient = 0;
    for (const auto& g : grads) out.max_gradient = std::max(out.max_gradient, std::abs((g * out.rho).trace().real()));
    if (out.max_gradient <= 1e-5 * std::max(1.0, scale)) return out;
    spdlog::warn("optimal_input_state: gradient residual {:.3e} in window {}, widening", out.max_gradient, window);
  }
  if (out.rho.size() == 0) throw std::runtime_error("optimal_input_state: saddle-point conditions infeasible");
  return out;
}

StatePair apply_to_purification(const MopProblem& m, const ComplexMatrix& rho) {
  m.validate();
  const std::size_t din = m.d_in(), dout = m.d_out();
  const auto e = herm_eig(hermitian_part(rho), 1.0);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(din * din);
  for (std::size_t i = 0; i < din; ++i) {
    const double w = std::max(e.values(i), 0.0);
    for (std::size_t a = 0; a < din; ++a) psi(a * din + i) += std::sqrt(w) * e.vectors(a, i);
  }
  const ComplexMatrix id = ComplexMatrix::Identity(din, din);
  StatePair out{ComplexMatrix::Zero(dout * din, dout * din), ComplexMatrix::Zero(dout * din, dout * din)};
  for (std::size_t k = 0; k < m.rank(); ++k) {
    const Eigen::VectorXcd a = kron(m.kraus[k], id) * psi;
    const Eigen::VectorXcd b = kron(m.derivative[k], id) * psi;
    out.rho += a * a.adjoint();
    out.drho += b * a.adjoint() + a * b.adjoint();
  }
  return out;
}

}  // namespace qcomb
