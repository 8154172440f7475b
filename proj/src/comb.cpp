#include "qcomb/comb.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace qcomb {

namespace {

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= b;
  return r;
}

// Traceless Hermitian basis on C^d.
std::vector<ComplexMatrix> traceless_basis(std::size_t d) {
  std::vector<ComplexMatrix> out;
  for (const auto& b : sdp::hermitian_basis(d))
    if (std::abs(b.trace()) < 1e-14) out.push_back(b);
  for (std::size_t j = 1; j < d; ++j) {
    ComplexMatrix g = ComplexMatrix::Zero(d, d);
    g(0, 0) = 1.0 / std::sqrt(2.0);
    g(j, j) = -1.0 / std::sqrt(2.0);
    out.push_back(g);
  }
  return out;
}

std::vector<std::string> names_of(const std::vector<Label>& l) {
  std::vector<std::string> n;
  for (const auto& x : l) n.push_back(x.name);
  return n;
}

}  // namespace

std::vector<Label> Comb::labels() const {
  std::vector<std::pair<std::string, std::size_t>> sub;
  for (std::size_t k = 1; k < N; ++k) {
    sub.emplace_back(label_H(k), d_probe);
    sub.emplace_back(label_K(k), d_probe);
  }
  sub.emplace_back(label_H(N), d_probe);
  sub.emplace_back(label_A(N), d_out_ancilla);
  return operator_labels(sub);
}

std::vector<std::string> Comb::order() const { return names_of(labels()); }

Comb Comb::from_matrix(std::size_t N, std::size_t d_probe, std::size_t d_out_ancilla, const ComplexMatrix& m) {
  Comb c;
  c.N = N;
  c.d_probe = d_probe;
  c.d_out_ancilla = d_out_ancilla;
  c.P = LabeledTensor::from_operator(c.labels(), m);
  return c;
}

CombReport validate_comb(const Comb& c, double tol) {
  CombReport r;
  const ComplexMatrix m = c.matrix();
  const auto e = herm_eig(hermitian_part(m), 1.0);
  r.min_eigenvalue = e.values(0);
  r.psd = r.min_eigenvalue >= -tol;
  r.level_residuals.assign(c.N, 0.0);
  LabeledTensor y = c.P;
  for (std::size_t k = c.N; k >= 1; --k) {
    std::vector<std::string> drop{label_H(k)};
    if (k == c.N) drop.push_back(label_A(c.N));
    LabeledTensor t = partial_trace(y, drop);
    if (k == 1) {
      r.trace_residual = std::abs(t.scalar_value() - cplx(1.0));
      r.level_residuals[0] = r.trace_residual;
      break;
    }
    const std::string kk = label_K(k - 1);
    LabeledTensor z = partial_trace(t, kk);
    z *= 1.0 / static_cast<double>(c.d_probe);
    const LabeledTensor ext = contract(z, LabeledTensor::identity_operator(operator_labels({{kk, c.d_probe}})));
    r.level_residuals[k - 1] = (t - ext).norm();
    y = z;
  }
  r.max_residual = 0;
  for (double v : r.level_residuals) r.max_residual = std::max(r.max_residual, v);
  r.ok = r.psd && r.max_residual <= tol;
  return r;
}

Comb link_strategy(const Strategy& s) {
  if (s.teeth.size() != s.N || s.N == 0) throw std::invalid_argument("link_strategy: malformed strategy");
  LabeledTensor t = s.teeth[0];
  for (std::size_t k = 2; k <= s.N; ++k) t = contract(t, s.teeth[k - 1]);
  Comb c;
  c.N = s.N;
  c.d_probe = s.d_probe;
  c.d_out_ancilla = s.ancilla_dim(s.N);
  c.P = t.permuted(c.order());
  return c;
}

ChannelComb channel_comb(const NoiseModelSpec& model, std::size_t N, double phi, double q) {
  // any comb it is linked with has dimension at least 2^(2N-1)
  if (N == 0 || ipow(2, 2 * N - 1) > kMaxCombDim)
    throw std::invalid_argument("channel_comb: N=" + std::to_string(N) + " exceeds the dense comb limit");
  const auto ev = evaluate_chain(channel_chain(model, N), phi, q);
  ChannelComb c;
  c.N = N;
  c.choi = ev[0].choi.tensor;
  c.derivative = ev[0].derivative;
  for (std::size_t k = 2; k <= N; ++k) {
    LabeledTensor d = contract(c.derivative, ev[k - 1].choi.tensor);
    d += contract(c.choi, ev[k - 1].derivative);
    c.derivative = std::move(d);
    c.choi = contract(c.choi, ev[k - 1].choi.tensor);
  }
  return c;
}

StatePair comb_output(const Comb& c, const ChannelComb& lambda) {
  const std::vector<std::string> order{label_K(c.N), label_A(c.N)};
  return {hermitian_part(contract(lambda.choi, c.P).to_operator(order)),
          hermitian_part(contract(lambda.derivative, c.P).to_operator(order))};
}

sdp::Problem comb_constraint_problem(std::size_t N, std::size_t d, std::size_t dA) {
  const std::size_t n = ipow(d, 2 * N - 1) * dA;
  sdp::Problem p;
  p.block_dims = {n};
  const auto G = traceless_basis(d);
  for (std::size_t k = N; k >= 2; --k) {
    const std::size_t pre = ipow(d, 2 * k - 3);
    const std::size_t q = n / (pre * d);
    for (const auto& B : sdp::hermitian_basis(pre))
      for (const auto& g : G) {
        sdp::Constraint c;
        sdp::BlockPart part = sdp::sparse_part(0, kron(B, g));
        part.kron_identity = q;
        c.parts.push_back(std::move(part));
        c.rhs = 0.0;
        p.constraints.push_back(std::move(c));
      }
  }
  sdp::Constraint tr;
  sdp::BlockPart one;
  one.entries.push_back({0, 0, 1.0});
  one.kron_identity = n;
  tr.parts.push_back(one);
  tr.rhs = static_cast<double>(ipow(d, N - 1));
  p.constraints.push_back(tr);
  return p;
}

FullCombResult iss_full_comb(const ChannelComb& lambda, std::size_t d, const FullCombConfig& cfg) {
  const std::size_t N = lambda.N;
  const std::size_t dA = cfg.d_out_ancilla;
  const std::size_t n = ipow(d, 2 * N - 1) * dA;
  if (n > kMaxCombDim) throw std::invalid_argument("iss_full_comb: comb dimension exceeds " + std::to_string(kMaxCombDim));
  sdp::Problem prob = comb_constraint_problem(N, d, dA);
  FullCombResult r;
  r.comb = link_strategy(random_strategy(N, d, dA, cfg.seed));
  const std::vector<Label> out = operator_labels({{label_K(N), d}, {label_A(N), dA}});
  std::vector<double> history;
  r.status = "max_iters";
  for (int it = 0; it < cfg.max_iters; ++it) {
    const StatePair pair = comb_output(r.comb, lambda);
    const ComplexMatrix L = solve_sld(pair);
    const double f = qfi_of_state(pair);
    r.trace.push_back(f);
    history.push_back(f);
    r.qfi = f;
    r.L = L;
    r.iterations = it;
    if (history.size() > static_cast<std::size_t>(cfg.window)) {
      const double prev = history[history.size() - 1 - cfg.window];
      if (f - prev <= cfg.threshold * std::abs(f)) {
        r.converged = true;
        r.status = "converged";
        break;
      }
    }
    LabeledTensor S = contract(lambda.choi, LabeledTensor::from_operator(out, -(L * L).transpose()));
    S += contract(lambda.derivative, LabeledTensor::from_operator(out, 2.0 * L.transpose()));
    const ComplexMatrix Sm = hermitian_part(S.to_operator(r.comb.order()));
    const ComplexMatrix P = r.comb.matrix();
    const double before = P.cwiseProduct(Sm).sum().real();
    prob.objective = {-hermitian_part(ComplexMatrix(Sm.transpose()))};
    const sdp::Solution sol = sdp::solve(prob, cfg.sdp);
    if (sol.status != sdp::Status::Optimal) {
      spdlog::warn("iss_full_comb: iteration {} SDP ended with status {}", it, sdp::to_string(sol.status));
      if (sol.status == sdp::Status::Infeasible || sol.status == sdp::Status::NumericalFailure) {
        r.status = "solver_failure";
        r.trace.push_back(before);
        continue;
      }
    }
    const ComplexMatrix cand = hermitian_part(sdp::project_affine(prob, {sol.X[0]})[0]);
    const double after = cand.cwiseProduct(Sm).sum().real();
    if (after >= before) r.comb = Comb::from_matrix(N, d, dA, cand);
    r.trace.push_back(std::max(after, before));
  }
  return r;
}

IsometrySequence decompose_to_isometries(const Comb& c, double cutoff) {
  const std::size_t N = c.N, d = c.d_probe;
  IsometrySequence seq;
  seq.N = N;
  seq.d_probe = d;
  seq.d_out_ancilla = c.d_out_ancilla;
  // P^(k) on (H_1, K_1, ..., H_k), with A_N appended at the top level.
  std::vector<LabeledTensor> levels(N + 1);
  levels[N] = c.P;
  for (std::size_t k = N; k >= 2; --k) {
    std::vector<std::string> drop{label_H(k), label_K(k - 1)};
    if (k == N) drop.push_back(label_A(N));
    LabeledTensor t = partial_trace(levels[k], drop);
    t *= 1.0 / static_cast<double>(d);
    levels[k - 1] = t;
  }
  auto level_order = [&](std::size_t k) {
    std::vector<std::string> o;
    for (std::size_t j = 1; j < k; ++j) {
      o.push_back(label_H(j));
      o.push_back(label_K(j));
    }
    o.push_back(label_H(k));
    if (k == N) o.push_back(label_A(N));
    return o;
  };
  // Purification: M[past, (H_k[, A_N], j)] with columns sqrt(lambda_j) v_j.
  ComplexMatrix prev;  // rows: past of level k-1 incl. H_{k-1}; cols: ancilla A_{k-1}
  std::size_t prev_rank = 1;
  for (std::size_t k = 1; k <= N; ++k) {
    const ComplexMatrix pk = hermitian_part(levels[k].to_operator(level_order(k)));
    const auto e = herm_eig(pk, 1.0);
    const double top = std::max(e.values.maxCoeff(), 1e-300);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = e.values.size() - 1; i >= 0; --i) {
      const double rel = e.values(i) / top;
      if (rel > cutoff) keep.push_back(i);
      if (rel > 0.1 * cutoff && rel < 10.0 * cutoff) seq.rank_ambiguous = true;
    }
    const std::size_t rank = keep.size();
    const std::size_t out_dim = (k == N) ? d * c.d_out_ancilla : d;
    const std::size_t past = static_cast<std::size_t>(pk.rows()) / out_dim;
    ComplexMatrix psi(pk.rows(), static_cast<Eigen::Index>(rank));
    for (std::size_t j = 0; j < rank; ++j) psi.col(j) = std::sqrt(e.values(keep[j])) * e.vectors.col(keep[j]);
    // Reshape to M_k[past, (out, j)].
    ComplexMatrix Mk(past, out_dim * rank);
    for (std::size_t p = 0; p < past; ++p)
      for (std::size_t o = 0; o < out_dim; ++o)
        for (std::size_t j = 0; j < rank; ++j) Mk(p, o * rank + j) = psi(p * out_dim + o, j);
    if (k == 1) {
      seq.V.push_back(Mk.transpose());  // (H_1, A_1) x 1
    } else {
      // M'[(past', kk), (a, kk')] = prev[past', a] delta(kk, kk'); solve M' V^T = M_k.
      const std::size_t pp = static_cast<std::size_t>(prev.rows());
      ComplexMatrix Mp = ComplexMatrix::Zero(pp * d, prev_rank * d);
      for (std::size_t x = 0; x < pp; ++x)
        for (std::size_t a = 0; a < prev_rank; ++a)
          for (std::size_t kk = 0; kk < d; ++kk) Mp(x * d + kk, a * d + kk) = prev(x, a);
      const ComplexMatrix Vt = Mp.completeOrthogonalDecomposition().solve(Mk);
      seq.residual = std::max(seq.residual, (Mp * Vt - Mk).norm());
      seq.V.push_back(Vt.transpose());
    }
    seq.ancilla_dims.push_back(rank);
    // Next level's past: rows (past, out) with columns j.
    ComplexMatrix nxt(past * out_dim, rank);
    for (std::size_t p = 0; p < past; ++p)
      for (std::size_t o = 0; o < out_dim; ++o)
        for (std::size_t j = 0; j < rank; ++j) nxt(p * out_dim + o, j) = Mk(p, o * rank + j);
    prev = nxt;
    prev_rank = rank;
  }
  return seq;
}

Comb reconstruct(const IsometrySequence& seq) {
  const std::size_t N = seq.N, d = seq.d_probe;
  // Psi[(past, out), a] grown one tooth at a time.
  ComplexMatrix psi = seq.V[0];  // (H_1 A_1) x 1
  std::size_t rank = seq.ancilla_dims[0];
  const std::size_t out1 = (N == 1) ? d * seq.d_out_ancilla : d;
  ComplexMatrix cur(psi.rows() / rank, rank);
  for (Eigen::Index r = 0; r < psi.rows(); ++r) cur(r / rank, r % rank) = psi(r, 0);
  std::size_t past = out1;
  for (std::size_t k = 2; k <= N; ++k) {
    const std::size_t out_dim = (k == N) ? d * seq.d_out_ancilla : d;
    const std::size_t nr = seq.ancilla_dims[k - 1];
    ComplexMatrix Mp = ComplexMatrix::Zero(past * d, rank * d);
    for (std::size_t x = 0; x < past; ++x)
      for (std::size_t a = 0; a < rank; ++a)
        for (std::size_t kk = 0; kk < d; ++kk) Mp(x * d + kk, a * d + kk) = cur(x, a);
    const ComplexMatrix Mk = Mp * seq.V[k - 1].transpose();  // [past*d, out*nr]
    ComplexMatrix nxt(past * d * out_dim, nr);
    for (std::size_t p = 0; p < past * d; ++p)
      for (std::size_t o = 0; o < out_dim; ++o)
        for (std::size_t j = 0; j < nr; ++j) nxt(p * out_dim + o, j) = Mk(p, o * nr + j);
    cur = nxt;
    past = past * d * out_dim;
    rank = nr;
  }
  return Comb::from_matrix(N, d, seq.d_out_ancilla, cur * cur.adjoint());
}

double max_isometry_defect(const IsometrySequence& seq) {
  double worst = 0;
  for (std::size_t k = 0; k < seq.V.size(); ++k) {
    const ComplexMatrix g = seq.V[k].adjoint() * seq.V[k];
    worst = std::max(worst, (g - ComplexMatrix::Identity(g.rows(), g.cols())).norm());
  }
  return worst;
}

KrausStrategy to_kraus_strategy(const IsometrySequence& seq) {
  const std::size_t d = seq.d_probe;
  KrausStrategy ks;
  ks.name = "isometries";
  ks.d_probe = d;
  for (std::size_t k = 1; k <= seq.N; ++k) {
    const ComplexMatrix& V = seq.V[k - 1];
    const std::size_t a_in = k == 1 ? 1 : seq.ancilla_dims[k - 2];
    // Columns of V run over (A_{k-1}, K_{k-1}); Kraus inputs are probe first.
    ComplexMatrix W(V.rows(), V.cols());
    for (std::size_t a = 0; a < a_in; ++a)
      for (std::size_t kk = 0; kk < (k == 1 ? 1 : d); ++kk)
        W.col(static_cast<Eigen::Index>(kk * a_in + a)) = V.col(static_cast<Eigen::Index>(a * (k == 1 ? 1 : d) + kk));
    KrausSet t;
    t.d_in = static_cast<std::size_t>(W.cols());
    if (k < seq.N) {
      t.d_out = static_cast<std::size_t>(W.rows());
      t.operators = {W};
    } else {
      const std::size_t r = seq.ancilla_dims[k - 1];
      t.d_out = static_cast<std::size_t>(W.rows()) / r;
      for (std::size_t j = 0; j < r; ++j) {
        ComplexMatrix op(t.d_out, t.d_in);
        for (std::size_t o = 0; o < t.d_out; ++o) op.row(o) = W.row(o * r + j);
        t.operators.push_back(op);
      }
    }
    ks.teeth.push_back(std::move(t));
  }
  return repaired(ks);
}

Strategy apply_gauge(const Strategy& s, std::size_t k, const ComplexMatrix& U) {
  if (k < 1 || k > s.N) throw std::out_of_range("apply_gauge: bond index out of range");
  const std::size_t da = s.ancilla_dim(k);
  if (static_cast<std::size_t>(U.rows()) != da || static_cast<std::size_t>(U.cols()) != da)
    throw std::invalid_argument("apply_gauge: U has the wrong dimension");
  if ((U.adjoint() * U - ComplexMatrix::Identity(da, da)).norm() > 1e-10)
    throw std::invalid_argument("apply_gauge: U is not unitary");
  Strategy out = s;
  {
    const ComplexMatrix m = s.tooth_matrix(k);
    const ComplexMatrix w = kron(identity(static_cast<std::size_t>(m.rows()) / da), U);
    out.set_tooth(k, w * m * w.adjoint());
  }
  if (k < s.N) {
    const ComplexMatrix m = s.tooth_matrix(k + 1);
    const ComplexMatrix w = kron(ComplexMatrix(U.conjugate()), identity(static_cast<std::size_t>(m.rows()) / da));
    out.set_tooth(k + 1, w * m * w.adjoint());
  }
  return out;
}

}  // namespace qcomb
