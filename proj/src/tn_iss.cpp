#include "qcomb/tn_iss.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace qcomb {

namespace {

std::vector<Label> output_labels_of(const Strategy& s) {
  return operator_labels({{label_K(s.N), s.d_probe}, {label_A(s.N), s.ancilla_dim(s.N)}});
}

ComplexMatrix inverse_sqrt_psd(const ComplexMatrix& t) {
  const auto e = herm_eig(hermitian_part(t), 1.0);
  RealVector d(e.values.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (e.values(i) <= 0) throw std::runtime_error("tooth repair: marginal is not positive definite");
    d(i) = 1.0 / std::sqrt(e.values(i));
  }
  return e.vectors * d.asDiagonal() * e.vectors.adjoint();
}

// <B (x) 1_out, P> = tr B for an orthonormal Hermitian basis B of the input space.
const sdp::Problem& tooth_constraints(std::size_t d_in, std::size_t d_out) {
  thread_local std::vector<std::pair<std::pair<std::size_t, std::size_t>, sdp::Problem>> cache;
  for (const auto& [key, p] : cache)
    if (key.first == d_in && key.second == d_out) return p;
  sdp::Problem p;
  p.block_dims = {d_in * d_out};
  for (const auto& b : sdp::hermitian_basis(d_in)) {
    sdp::Constraint c;
    sdp::BlockPart part = sdp::sparse_part(0, b);
    part.kron_identity = d_out;
    c.parts.push_back(std::move(part));
    c.rhs = b.trace().real();
    p.constraints.push_back(std::move(c));
  }
  cache.push_back({{d_in, d_out}, std::move(p)});
  return cache.back().second;
}

}  // namespace

EnvironmentCache update_right_envs(const Strategy& s, const std::vector<ChannelEvaluation>& channels,
                                   const ComplexMatrix& L) {
  if (channels.size() != s.N) throw std::invalid_argument("update_right_envs: need one channel per slot");
  const auto out = output_labels_of(s);
  const std::size_t d = s.d_probe * s.ancilla_dim(s.N);
  if (static_cast<std::size_t>(L.rows()) != d || static_cast<std::size_t>(L.cols()) != d)
    throw std::invalid_argument("update_right_envs: L has the wrong dimension");
  EnvironmentCache c;
  c.N = s.N;
  c.right_zero.resize(s.N + 2);
  c.right_plus.resize(s.N + 2);
  c.right_zero[s.N + 1] = LabeledTensor::from_operator(out, -(L * L).transpose());
  c.right_plus[s.N + 1] = LabeledTensor::from_operator(out, 2.0 * L.transpose());
  for (std::size_t k = s.N; k >= 1; --k) {
    LabeledTensor t0, tp;
    if (k == s.N) {
      t0 = c.right_zero[k + 1];
      tp = c.right_plus[k + 1];
    } else {
      t0 = contract(s.teeth[k], c.right_zero[k + 1]);
      tp = contract(s.teeth[k], c.right_plus[k + 1]);
    }
    const auto& ch = channels[k - 1];
    c.right_zero[k] = contract(ch.choi.tensor, t0) + contract(ch.derivative, tp);
    c.right_plus[k] = contract(ch.choi.tensor, tp);
  }
  c.left.assign(s.N + 1, LeftPair{});
  c.left_valid = 1;
  return c;
}

void advance_left(EnvironmentCache& cache, const Strategy& s, const std::vector<ChannelEvaluation>& channels,
                  std::size_t k) {
  if (k < 1 || k > s.N) throw std::out_of_range("advance_left: slot out of range");
  if (cache.left_valid < k) throw std::logic_error("advance_left: left environment is stale");
  cache.left[k] = left_step(cache.left[k - 1], s.teeth[k - 1], channels[k - 1]);
  cache.left_valid = k + 1;
}

ComplexMatrix assemble_Sk(const EnvironmentCache& cache, const Strategy& s, std::size_t k) {
  if (k < 1 || k > s.N || cache.N != s.N) throw std::out_of_range("assemble_Sk: slot out of range");
  if (cache.left_valid < k) throw std::logic_error("assemble_Sk: left environment is stale");
  const auto order = s.tooth_order(k);
  if (k == 1) return hermitian_part(cache.right_zero[1].to_operator(order));
  const auto& left = cache.left[k - 1];
  LabeledTensor S = contract(left.zero, cache.right_zero[k]);
  S += contract(left.plus, cache.right_plus[k]);
  return hermitian_part(S.to_operator(order));
}

double tooth_objective(const ComplexMatrix& S, const ComplexMatrix& P) { return P.cwiseProduct(S).sum().real(); }

ToothUpdate optimize_tooth(const ComplexMatrix& S, const Strategy& s, std::size_t k, const ComplexMatrix& previous,
                           const sdp::Options& options) {
  ToothUpdate u;
  u.previous_objective = tooth_objective(S, previous);
  ComplexMatrix candidate;
  if (k == 1) {
    const auto e = herm_eig(hermitian_part(ComplexMatrix(S.transpose())), 1.0);
    const ComplexVector v = e.vectors.col(e.vectors.cols() - 1);
    candidate = v * v.adjoint();
  } else {
    const std::size_t d_in = s.ancilla_dim(k - 1) * s.d_probe;
    const std::size_t d_out = s.d_probe * s.ancilla_dim(k);
    sdp::Problem p = tooth_constraints(d_in, d_out);
    p.objective = {-hermitian_part(ComplexMatrix(S.transpose()))};
    const sdp::Solution sol = sdp::solve(p, options);
    u.status = sol.status;
    if (sol.status != sdp::Status::Optimal) {
      u.solver_failed = true;
      spdlog::warn("tooth {} SDP ended with status {}", k, sdp::to_string(sol.status));
    }
    try {
      const ComplexMatrix X = hermitian_part(sol.X[0]);
      ComplexMatrix t = ComplexMatrix::Zero(d_in, d_in);
      for (std::size_t r = 0; r < d_in; ++r)
        for (std::size_t c = 0; c < d_in; ++c)
          for (std::size_t o = 0; o < d_out; ++o) t(r, c) += X(r * d_out + o, c * d_out + o);
      const ComplexMatrix fix = kron(inverse_sqrt_psd(t), identity(d_out));
      candidate = hermitian_part(fix * X * fix);
    } catch (const std::exception& ex) {
      u.solver_failed = true;
      spdlog::warn("tooth {} repair failed: {}", k, ex.what());
    }
  }
  if (candidate.size() > 0) {
    const double val = tooth_objective(S, candidate);
    if (val >= u.previous_objective) {
      u.tooth = candidate;
      u.objective = val;
      u.improved = true;
      return u;
    }
  }
  u.tooth = previous;
  u.objective = u.previous_objective;
  return u;
}

void IssConfig::validate() const {
  if (!(threshold > 0)) throw std::invalid_argument("IssConfig: threshold must be positive");
  if (window < 1) throw std::invalid_argument("IssConfig: window must be >= 1");
  if (!(q0 >= 0 && q0 < 1)) throw std::invalid_argument("IssConfig: q0 must lie in [0,1)");
  if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("IssConfig: gamma must lie in (0,1)");
  if (max_sweeps < 1) throw std::invalid_argument("IssConfig: max_sweeps must be positive");
  if (restarts < 1) throw std::invalid_argument("IssConfig: restarts must be positive");
  if (d_A_per_bond.empty() && d_A == 0) throw std::invalid_argument("IssConfig: d_A must be positive");
}

std::vector<std::size_t> IssConfig::bonds(std::size_t N) const {
  if (d_A_per_bond.empty()) return std::vector<std::size_t>(N, d_A);
  if (d_A_per_bond.size() != N) throw std::invalid_argument("IssConfig: d_A_per_bond must have N entries");
  return d_A_per_bond;
}

double IssConfig::q_at(int sweep) const {
  const double q = q0 * std::pow(gamma, sweep);
  return q < 1e-10 ? 0.0 : q;
}

namespace {

OptimizationResult run_single(Strategy s, const NoiseModelSpec& model, const IssConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  OptimizationResult r;
  const std::size_t N = s.N;
  const auto chain = channel_chain(model, N);
  const auto exact = evaluate_chain(chain, cfg.phi, 0.0);
  auto channels_at = [&](double q) { return q > 0 ? evaluate_chain(chain, cfg.phi, q) : exact; };

  auto evals = channels_at(cfg.q_at(0));
  ComplexMatrix L = solve_sld(compute_output_pair(s, evals));
  r.qfi = qfi_of_state(compute_output_pair(s, exact));
  r.strategy = s;
  r.status = "max_sweeps";
  const int limit = cfg.fixed_sweeps > 0 ? cfg.fixed_sweeps : cfg.max_sweeps;
  for (int t = 0; t < limit; ++t) {
    const double q = cfg.q_at(t);
    if (t > 0) evals = channels_at(q);
    EnvironmentCache cache = update_right_envs(s, evals, L);
    for (std::size_t k = 1; k <= N; ++k) {
      const ComplexMatrix S = assemble_Sk(cache, s, k);
      const ToothUpdate u = optimize_tooth(S, s, k, s.tooth_matrix(k), cfg.sdp);
      if (k == 1) r.trace.push_back({t, q, u.previous_objective});
      if (u.solver_failed) ++r.solver_failures;
      if (u.improved) s.set_tooth(k, u.tooth);
      r.trace.push_back({t, q, u.objective});
      advance_left(cache, s, evals, k);
    }
    const auto order = output_order(s);
    const StatePair pair{hermitian_part(cache.left[N].zero.to_operator(order)),
                         hermitian_part(cache.left[N].plus.to_operator(order))};
    L = solve_sld(pair);
    r.trace.push_back({t, q, pre_qfi(pair, L)});
    const double f = q > 0 ? qfi_of_state(compute_output_pair(s, exact)) : qfi_of_state(pair);
    r.sweep_qfi.push_back(f);
    r.sweeps = t + 1;
    if (f > r.qfi) {
      r.qfi = f;
      r.strategy = s;
    }
    if (cfg.fixed_sweeps > 0) continue;
    const auto& h = r.sweep_qfi;
    if (q <= cfg.q_negligible && h.size() > static_cast<std::size_t>(cfg.window)) {
      const double prev = h[h.size() - 1 - cfg.window];
      if (h.back() - prev <= cfg.threshold * std::abs(h.back())) {
        r.converged = true;
        r.status = "converged";
        break;
      }
    }
  }
  if (cfg.fixed_sweeps > 0) {
    r.converged = true;
    r.status = "fixed_sweeps";
  }
  r.L = solve_sld(compute_output_pair(r.strategy, exact));
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace

OptimizationResult optimize_from(const Strategy& initial, const NoiseModelSpec& model, const IssConfig& config) {
  config.validate();
  model.validate();
  auto r = run_single(initial, model, config);
  r.restart_qfi = {r.qfi};
  return r;
}

OptimizationResult optimize(const NoiseModelSpec& model, std::size_t N, const IssConfig& config) {
  config.validate();
  model.validate();
  if (N == 0) throw std::invalid_argument("optimize: N must be positive");
  const auto start = std::chrono::steady_clock::now();
  OptimizationResult best;
  std::vector<double> all;
  bool have = false;
  for (int i = 0; i < config.restarts; ++i) {
    const Strategy init = random_strategy(N, 2, config.bonds(N), config.seed + static_cast<std::uint64_t>(i));
    OptimizationResult r = run_single(init, model, config);
    all.push_back(r.qfi);
    if (!have || r.qfi > best.qfi) {
      best = std::move(r);
      best.best_restart = static_cast<std::size_t>(i);
      have = true;
    }
  }
  best.restart_qfi = all;
  best.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return best;
}

}  // namespace qcomb
