#include "qcomb/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <spdlog/spdlog.h>

namespace qcomb::sdp {

namespace {

struct Row {
  std::vector<BlockPart> parts;  // Hermitian, both triangles present
  double b = 0;
  double scale = 1;
  std::size_t source = 0;
  std::size_t nnz() const {
    std::size_t n = 0;
    for (const auto& p : parts) n += p.entries.size();
    return n;
  }
};

// Merges the parts of one constraint that touch `block`, rewritten over the reduced space of
// size n/q, where q divides every part's identity factor.
BlockPart canonical_part(const std::vector<BlockPart>& parts, std::size_t block, std::size_t n, std::size_t q) {
  std::map<std::pair<std::size_t, std::size_t>, cplx> acc;
  for (const auto& in : parts) {
    if (in.block != block) continue;
    const std::size_t f = in.kron_identity / q;
    for (const auto& e : in.entries) {
      if ((e.row + 1) * in.kron_identity > n || (e.col + 1) * in.kron_identity > n)
        throw std::invalid_argument("sdp: constraint entry outside its block");
      for (std::size_t o = 0; o < f; ++o) acc[{e.row * f + o, e.col * f + o}] += e.value;
    }
  }
  std::map<std::pair<std::size_t, std::size_t>, cplx> herm;
  for (const auto& [rc, v] : acc) {
    herm[rc] += 0.5 * v;
    herm[{rc.second, rc.first}] += 0.5 * std::conj(v);
  }
  BlockPart out;
  out.block = block;
  out.kron_identity = q;
  for (const auto& [rc, v] : herm)
    if (v != cplx(0.0)) out.entries.push_back({rc.first, rc.second, v});
  return out;
}

double part_inner(const BlockPart& p, const ComplexMatrix& X) {
  double s = 0;
  for (const auto& e : p.entries) s += (e.value * X(e.col, e.row)).real();
  return s;
}

double part_norm2(const BlockPart& p) {
  double s = 0;
  for (const auto& e : p.entries) s += std::norm(e.value);
  return s * static_cast<double>(p.kron_identity);
}

// Tr over the trailing identity factor q.
ComplexMatrix reduce(const ComplexMatrix& X, std::size_t q) {
  if (q == 1) return X;
  const Eigen::Index r = X.rows() / static_cast<Eigen::Index>(q);
  ComplexMatrix out(r, r);
  for (Eigen::Index a = 0; a < r; ++a)
    for (Eigen::Index b = 0; b < r; ++b) out(a, b) = X.block(a * q, b * q, q, q).trace();
  return out;
}

ComplexMatrix expand(const ComplexMatrix& Y, std::size_t q) {
  if (q == 1) return Y;
  return kron(Y, ComplexMatrix::Identity(q, q));
}

struct Scaling {
  ComplexMatrix Lx, Lz;  // Cholesky factors of X and Z
  ComplexMatrix G;     // W = G G^*
  ComplexMatrix Ginv;
  ComplexMatrix W;
  RealVector d;        // scaled point V = diag(d)
};

class Solver {
 public:
  Solver(const Problem& p, const Options& o) : opt_(o) {
    p.validate();
    dims_ = p.block_dims;
    nb_ = dims_.size();
    nu_ = 0;
    for (auto d : dims_) nu_ += static_cast<double>(d);
    C_ = p.objective;
    for (std::size_t b = 0; b < nb_; ++b) C_[b] = hermitian_part(C_[b]);
    double cn = 0;
    for (const auto& c : C_) cn += c.squaredNorm();
    cscale_ = std::max(1.0, std::sqrt(cn));
    for (auto& c : C_) c /= cscale_;

    // A block keeps a common identity factor only if every part touching it shares one.
    q_.assign(nb_, 0);
    for (const auto& c : p.constraints)
      for (const auto& part : c.parts) {
        std::size_t& q = q_[part.block];
        const std::size_t k = std::max<std::size_t>(1, part.kron_identity);
        if (q == 0) q = k;
        else if (k % q != 0) q = (q % k == 0) ? k : 1;
      }
    for (auto& q : q_)
      if (q == 0) q = 1;
    for (const auto& c : p.constraints)
      for (const auto& part : c.parts)
        if (std::max<std::size_t>(1, part.kron_identity) % q_[part.block] != 0) q_[part.block] = 1;

    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
      Row r;
      r.source = i;
      double n2 = 0;
      std::vector<std::size_t> blocks;
      for (const auto& part : p.constraints[i].parts)
        if (std::find(blocks.begin(), blocks.end(), part.block) == blocks.end()) blocks.push_back(part.block);
      std::sort(blocks.begin(), blocks.end());
      for (auto b : blocks) {
        BlockPart cp = canonical_part(p.constraints[i].parts, b, dims_[b], q_[b]);
        if (cp.entries.empty()) continue;
        n2 += part_norm2(cp);
        r.parts.push_back(std::move(cp));
      }
      if (n2 == 0) {
        if (std::abs(p.constraints[i].rhs) > 0) zero_row_inconsistent_ = true;
        dropped_.push_back(i);
        continue;
      }
      r.scale = std::sqrt(n2);
      for (auto& part : r.parts)
        for (auto& e : part.entries) e.value /= r.scale;
      r.b = p.constraints[i].rhs / r.scale;
      rows_.push_back(std::move(r));
    }
    total_rows_ = p.constraints.size();
  }

  Solution run();
  std::vector<ComplexMatrix> project(const std::vector<ComplexMatrix>& X);

 private:
  Eigen::MatrixXd gram() const;
  bool prune_redundant();
  void build_block_index();
  RealVector apply_A(const std::vector<ComplexMatrix>& X) const;
  std::vector<ComplexMatrix> apply_At(const RealVector& y) const;
  bool scaling(const ComplexMatrix& X, const ComplexMatrix& Z, Scaling& s) const;
  Eigen::MatrixXd schur(const std::vector<Scaling>& sc) const;
  static double max_step(const ComplexMatrix& L, const ComplexMatrix& dX);
  Solution finish(Status st, int iters, const std::vector<ComplexMatrix>& X, const RealVector& y,
                  const std::vector<ComplexMatrix>& Z, std::vector<IterateRecord> trace);

  Options opt_;
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> q_;  // identity factor per block
  std::size_t nb_ = 0;
  double nu_ = 0;
  std::vector<ComplexMatrix> C_;
  double cscale_ = 1;
  std::vector<Row> rows_;
  std::size_t total_rows_ = 0;
  std::vector<std::size_t> dropped_;
  bool zero_row_inconsistent_ = false;
  bool inconsistent_ = false;
  Eigen::LLT<Eigen::MatrixXd> gram_llt_;
  // per block: (row index, part index)
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> by_block_;
  std::vector<bool> dense_path_;
  std::vector<std::vector<ComplexMatrix>> dense_rows_;
  double last_pinf_ = 0, last_dinf_ = 0, last_gap_ = 0, last_pobj_ = 0, last_dobj_ = 0;
  bool pinf_cert_ = false, dinf_cert_ = false;
};

Eigen::MatrixXd Solver::gram() const {
  const std::size_t m = rows_.size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t b = 0; b < nb_; ++b) {
    std::unordered_map<std::uint64_t, std::vector<std::pair<std::size_t, cplx>>> at;
    for (std::size_t i = 0; i < m; ++i)
      for (const auto& part : rows_[i].parts)
        if (part.block == b)
          for (const auto& e : part.entries) at[e.row * dims_[b] + e.col].emplace_back(i, e.value);
    const double q = static_cast<double>(q_[b]);
    for (const auto& [pos, list] : at)
      for (std::size_t u = 0; u < list.size(); ++u)
        for (std::size_t v = u; v < list.size(); ++v) {
          const double val = q * (list[u].second * std::conj(list[v].second)).real();
          G(list[u].first, list[v].first) += val;
          if (list[u].first != list[v].first) G(list[v].first, list[u].first) += val;
        }
  }
  return G;
}

bool Solver::prune_redundant() {
  const Eigen::MatrixXd G = gram();
  const std::size_t m = rows_.size();
  // Pivoted Cholesky; rows whose residual norm vanishes are linear combinations of earlier picks.
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
  RealVector diag = G.diagonal();
  std::size_t rank = 0;
  const double tol = 1e-10 * std::max(1.0, diag.size() ? diag.maxCoeff() : 1.0);
  for (; rank < m; ++rank) {
    std::size_t best = rank;
    for (std::size_t j = rank; j < m; ++j)
      if (diag(order[j]) > diag(order[best])) best = j;
    if (diag(order[best]) <= tol) break;
    std::swap(order[rank], order[best]);
    const std::size_t piv = order[rank];
    const double lkk = std::sqrt(diag(piv));
    L(piv, rank) = lkk;
    for (std::size_t j = rank + 1; j < m; ++j) {
      const std::size_t r = order[j];
      double s = G(r, piv);
      for (std::size_t t = 0; t < rank; ++t) s -= L(r, t) * L(piv, t);
      L(r, rank) = s / lkk;
      diag(r) -= L(r, rank) * L(r, rank);
    }
  }
  std::vector<std::size_t> keep(order.begin(), order.begin() + rank);
  std::sort(keep.begin(), keep.end());
  if (rank < m) {
    std::vector<std::size_t> drop(order.begin() + rank, order.end());
    Eigen::MatrixXd Gkk(rank, rank);
    RealVector bk(rank);
    for (std::size_t i = 0; i < rank; ++i) {
      bk(i) = rows_[keep[i]].b;
      for (std::size_t j = 0; j < rank; ++j) Gkk(i, j) = G(keep[i], keep[j]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Gkk);
    for (auto d : drop) {
      RealVector g(rank);
      for (std::size_t i = 0; i < rank; ++i) g(i) = G(keep[i], d);
      const RealVector coef = llt.solve(g);
      if (std::abs(coef.dot(bk) - rows_[d].b) > 1e-8 * (1.0 + std::abs(rows_[d].b))) inconsistent_ = true;
      dropped_.push_back(rows_[d].source);
    }
    spdlog::warn("sdp: dropped {} linearly dependent equality constraint(s)", drop.size());
    std::vector<Row> kept;
    for (auto k : keep) kept.push_back(std::move(rows_[k]));
    rows_ = std::move(kept);
  }
  std::sort(dropped_.begin(), dropped_.end());
  if (!rows_.empty()) {
    Eigen::MatrixXd Gk(rows_.size(), rows_.size());
    const Eigen::MatrixXd full = rank < m ? gram() : G;
    gram_llt_.compute(full);
  }
  return !inconsistent_ && !zero_row_inconsistent_;
}

void Solver::build_block_index() {
  by_block_.assign(nb_, {});
  for (std::size_t i = 0; i < rows_.size(); ++i)
    for (std::size_t k = 0; k < rows_[i].parts.size(); ++k) by_block_[rows_[i].parts[k].block].emplace_back(i, k);
  dense_path_.assign(nb_, false);
  dense_rows_.assign(nb_, {});
  for (std::size_t b = 0; b < nb_; ++b) {
    double nnz = 0;
    for (const auto& [i, k] : by_block_[b]) nnz += static_cast<double>(rows_[i].parts[k].entries.size());
    if (q_[b] > 1) continue;
    const double n = static_cast<double>(dims_[b]);
    const double pair_cost = 0.5 * nnz * nnz;
    const double dense_cost = static_cast<double>(by_block_[b].size()) * (4.0 * n * n * n) + nnz * by_block_[b].size();
    if (pair_cost > dense_cost) {
      dense_path_[b] = true;
      for (const auto& [i, k] : by_block_[b]) {
        ComplexMatrix a = ComplexMatrix::Zero(dims_[b], dims_[b]);
        for (const auto& e : rows_[i].parts[k].entries) a(e.row, e.col) += e.value;
        dense_rows_[b].push_back(std::move(a));
      }
    }
  }
}

RealVector Solver::apply_A(const std::vector<ComplexMatrix>& X) const {
  std::vector<ComplexMatrix> red(nb_);
  for (std::size_t b = 0; b < nb_; ++b) red[b] = reduce(X[b], q_[b]);
  RealVector out(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double s = 0;
    for (const auto& part : rows_[i].parts) s += part_inner(part, red[part.block]);
    out(i) = s;
  }
  return out;
}

std::vector<ComplexMatrix> Solver::apply_At(const RealVector& y) const {
  std::vector<ComplexMatrix> out;
  for (std::size_t b = 0; b < nb_; ++b) out.push_back(ComplexMatrix::Zero(dims_[b] / q_[b], dims_[b] / q_[b]));
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (y(i) == 0.0) continue;
    for (const auto& part : rows_[i].parts)
      for (const auto& e : part.entries) out[part.block](e.row, e.col) += y(i) * e.value;
  }
  for (std::size_t b = 0; b < nb_; ++b) out[b] = expand(out[b], q_[b]);
  return out;
}

bool Solver::scaling(const ComplexMatrix& X, const ComplexMatrix& Z, Scaling& s) const {
  Eigen::LLT<ComplexMatrix> lx(X), lz(Z);
  if (lx.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
  const ComplexMatrix Lx = lx.matrixL();
  s.Lx = Lx;
  s.Lz = lz.matrixL();
  const ComplexMatrix T = hermitian_part(Lx.adjoint() * Z * Lx);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(T);
  if (es.info() != Eigen::Success) return false;
  const RealVector lam = es.eigenvalues();
  if (lam.minCoeff() <= 0) return false;
  s.d = lam.cwiseSqrt();
  const RealVector dm = s.d.cwiseSqrt().cwiseInverse();
  s.G = Lx * es.eigenvectors() * dm.asDiagonal();
  const ComplexMatrix LxInv = Lx.triangularView<Eigen::Lower>().solve(ComplexMatrix::Identity(X.rows(), X.cols()));
  s.Ginv = s.d.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint() * LxInv;
  s.W = s.G * s.G.adjoint();
  return true;
}

Eigen::MatrixXd Solver::schur(const std::vector<Scaling>& sc) const {
  const std::size_t m = rows_.size();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t b = 0; b < nb_; ++b) {
    const auto& list = by_block_[b];
    const std::size_t q = q_[b];
    if (q > 1) {
      // Omega[(x,y),(u,v)] = tr(W_xy W_uv) over q x q blocks of W.
      const Eigen::Index r = static_cast<Eigen::Index>(dims_[b] / q), qq = static_cast<Eigen::Index>(q);
      ComplexMatrix V(r * r, qq * qq), Vt(r * r, qq * qq);
      for (Eigen::Index x = 0; x < r; ++x)
        for (Eigen::Index y = 0; y < r; ++y)
          for (Eigen::Index o = 0; o < qq; ++o)
            for (Eigen::Index o2 = 0; o2 < qq; ++o2) {
              V(x * r + y, o * qq + o2) = sc[b].W(x * qq + o, y * qq + o2);
              Vt(x * r + y, o2 * qq + o) = sc[b].W(x * qq + o, y * qq + o2);
            }
      const ComplexMatrix omega = V * Vt.transpose();
      for (std::size_t ii = 0; ii < list.size(); ++ii) {
        const auto& ai = rows_[list[ii].first].parts[list[ii].second].entries;
        for (std::size_t jj = ii; jj < list.size(); ++jj) {
          const auto& aj = rows_[list[jj].first].parts[list[jj].second].entries;
          cplx acc = 0;
          for (const auto& e1 : ai)
            for (const auto& e2 : aj)
              acc += e1.value * e2.value *
                     omega(static_cast<Eigen::Index>(e1.col) * r + static_cast<Eigen::Index>(e2.row),
                           static_cast<Eigen::Index>(e2.col) * r + static_cast<Eigen::Index>(e1.row));
          M(list[ii].first, list[jj].first) += acc.real();
          if (ii != jj) M(list[jj].first, list[ii].first) += acc.real();
        }
      }
      continue;
    }
    const ComplexMatrix& W = sc[b].W;
    if (dense_path_[b]) {
      for (std::size_t jj = 0; jj < list.size(); ++jj) {
        const ComplexMatrix Gj = W * dense_rows_[b][jj] * W;
        for (std::size_t ii = 0; ii <= jj; ++ii) {
          const double v = part_inner(rows_[list[ii].first].parts[list[ii].second], Gj);
          M(list[ii].first, list[jj].first) += v;
          if (ii != jj) M(list[jj].first, list[ii].first) += v;
        }
      }
      continue;
    }
    for (std::size_t ii = 0; ii < list.size(); ++ii) {
      const auto& ai = rows_[list[ii].first].parts[list[ii].second].entries;
      for (std::size_t jj = ii; jj < list.size(); ++jj) {
        const auto& aj = rows_[list[jj].first].parts[list[jj].second].entries;
        cplx acc = 0;
        // Re sum A_i[a,b] W[b,c] A_j[c,d] W[d,a]
        for (const auto& e1 : ai)
          for (const auto& e2 : aj) acc += e1.value * e2.value * W(e1.col, e2.row) * W(e2.col, e1.row);
        M(list[ii].first, list[jj].first) += acc.real();
        if (ii != jj) M(list[jj].first, list[ii].first) += acc.real();
      }
    }
  }
  return M;
}

// Largest alpha with L L^* + alpha dX >= 0.
double Solver::max_step(const ComplexMatrix& Lfac, const ComplexMatrix& dX) {
  const auto L = Lfac.triangularView<Eigen::Lower>();
  const ComplexMatrix t = L.solve(dX);
  const ComplexMatrix S = hermitian_part(L.solve(ComplexMatrix(t.adjoint())).adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(S, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return lmin < 0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

Solution Solver::finish(Status st, int iters, const std::vector<ComplexMatrix>& X, const RealVector& y,
                        const std::vector<ComplexMatrix>& Z, std::vector<IterateRecord> trace) {
  Solution s;
  s.status = st;
  s.iterations = iters;
  s.X = X;
  s.Z = Z;
  for (auto& z : s.Z) z *= cscale_;
  s.y = RealVector::Zero(total_rows_);
  for (std::size_t i = 0; i < rows_.size() && i < static_cast<std::size_t>(y.size()); ++i)
    s.y(rows_[i].source) = y(i) * cscale_ / rows_[i].scale;
  s.primal_objective = last_pobj_ * cscale_;
  s.dual_objective = last_dobj_ * cscale_;
  s.gap = last_gap_;
  s.primal_infeasibility = last_pinf_;
  s.dual_infeasibility = last_dinf_;
  s.primal_infeasible = pinf_cert_;
  s.dual_infeasible = dinf_cert_;
  s.dropped_constraints = dropped_;
  for (auto& r : trace) {
    r.primal_objective *= cscale_;
    r.dual_objective *= cscale_;
  }
  s.trace = std::move(trace);
  return s;
}

Solution Solver::run() {
  std::vector<ComplexMatrix> X, Z;
  for (auto d : dims_) {
    X.push_back(ComplexMatrix::Identity(d, d));
    Z.push_back(ComplexMatrix::Identity(d, d));
  }
  RealVector y = RealVector::Zero(rows_.size());
  if (!prune_redundant()) {
    pinf_cert_ = true;
    return finish(Status::Infeasible, 0, X, y, Z, {});
  }
  build_block_index();
  const std::size_t m = rows_.size();
  RealVector b(m);
  for (std::size_t i = 0; i < m; ++i) b(i) = rows_[i].b;
  const double bnorm = b.norm();
  double cnorm = 0;
  for (const auto& c : C_) cnorm += c.squaredNorm();
  cnorm = std::sqrt(cnorm);

  // Primal start: the multiple of the identity that best fits the equalities.
  std::vector<ComplexMatrix> eye;
  for (auto d : dims_) eye.push_back(ComplexMatrix::Identity(d, d));
  const RealVector a_eye = apply_A(eye);
  double s = 1.0;
  if (m > 0 && a_eye.squaredNorm() > 0) {
    const double fit = a_eye.dot(b) / a_eye.squaredNorm();
    if (fit > 0) s = (b - fit * a_eye).norm() <= 1e-10 * (1 + bnorm) ? fit : std::max(1.0, fit);
  }
  for (auto& x : X) x *= s;

  // Dual start: if the identity lies in the range of A^*, pick y so that Z = C + t I is feasible.
  bool dual_feasible_start = false;
  if (m > 0) {
    const RealVector yI = gram_llt_.solve(a_eye);
    const auto AtyI = apply_At(yI);
    double res = 0;
    for (std::size_t bk = 0; bk < nb_; ++bk) res += (AtyI[bk] - eye[bk]).squaredNorm();
    if (std::sqrt(res) <= 1e-8 * std::sqrt(nu_)) {
      double lmin = std::numeric_limits<double>::infinity();
      for (const auto& c : C_) {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(c, Eigen::EigenvaluesOnly);
        lmin = std::min(lmin, es.eigenvalues().minCoeff());
      }
      const double t = std::max(0.0, -lmin) + 1.0;
      y = -t * yI;
      const auto Aty = apply_At(y);
      for (std::size_t bk = 0; bk < nb_; ++bk) Z[bk] = hermitian_part(C_[bk] - Aty[bk]);
      dual_feasible_start = true;
    }
  }
  if (!dual_feasible_start) {
    const double eta = std::max(1.0, cnorm);
    for (auto& z : Z) z *= eta;
  }

  std::vector<IterateRecord> trace;
  double tau = 0.9;
  int stalls = 0;
  for (int iter = 0;; ++iter) {
    const RealVector AX = apply_A(X);
    const RealVector rp = b - AX;
    const auto Aty = apply_At(y);
    std::vector<ComplexMatrix> Rd(nb_);
    double rd2 = 0, pobj = 0, xz = 0, aty_z2 = 0;
    for (std::size_t bk = 0; bk < nb_; ++bk) {
      Rd[bk] = C_[bk] - Aty[bk] - Z[bk];
      rd2 += Rd[bk].squaredNorm();
      pobj += (C_[bk].cwiseProduct(X[bk].transpose())).sum().real();
      xz += (X[bk].cwiseProduct(Z[bk].transpose())).sum().real();
      aty_z2 += (Aty[bk] + Z[bk]).squaredNorm();
    }
    const double dobj = m ? b.dot(y) : 0.0;
    const double mu = xz / nu_;
    last_pobj_ = pobj;
    last_dobj_ = dobj;
    last_pinf_ = rp.norm() / (1 + bnorm);
    last_dinf_ = std::sqrt(rd2) / (1 + cnorm);
    const double denom = 1 + std::abs(pobj) + std::abs(dobj);
    last_gap_ = std::abs(pobj - dobj) / denom;
    if (opt_.keep_trace) trace.push_back({iter, pobj, dobj, last_pinf_, last_dinf_, mu});

    if (last_pinf_ <= opt_.feas_tol && last_dinf_ <= opt_.feas_tol && last_gap_ <= opt_.gap_tol &&
        xz / denom <= opt_.gap_tol)
      return finish(Status::Optimal, iter, X, y, Z, std::move(trace));
    if (dobj > 0 && std::sqrt(aty_z2) < 1e-8 * dobj) {
      pinf_cert_ = true;
      return finish(Status::Infeasible, iter, X, y, Z, std::move(trace));
    }
    if (pobj < 0 && AX.norm() < 1e-8 * -pobj) {
      dinf_cert_ = true;
      return finish(Status::Infeasible, iter, X, y, Z, std::move(trace));
    }
    if (iter >= opt_.max_iters) return finish(Status::MaxIters, iter, X, y, Z, std::move(trace));

    std::vector<Scaling> sc(nb_);
    for (std::size_t bk = 0; bk < nb_; ++bk)
      if (!scaling(X[bk], Z[bk], sc[bk])) return finish(Status::NumericalFailure, iter, X, y, Z, std::move(trace));
    Eigen::LLT<Eigen::MatrixXd> schur_llt;
    if (m > 0) {
      Eigen::MatrixXd M = schur(sc);
      schur_llt.compute(M);
      if (schur_llt.info() != Eigen::Success) {
        M.diagonal().array() += 1e-13 * std::max(1.0, M.diagonal().maxCoeff());
        schur_llt.compute(M);
        if (schur_llt.info() != Eigen::Success)
          return finish(Status::NumericalFailure, iter, X, y, Z, std::move(trace));
      }
    }
    std::vector<ComplexMatrix> WRdW(nb_);
    for (std::size_t bk = 0; bk < nb_; ++bk) WRdW[bk] = sc[bk].W * Rd[bk] * sc[bk].W;

    auto direction = [&](const std::vector<ComplexMatrix>& Rc, std::vector<ComplexMatrix>& dX, RealVector& dy,
                         std::vector<ComplexMatrix>& dZ) {
      dy = RealVector::Zero(m);
      if (m > 0) {
        const RealVector rhs = rp + apply_A(WRdW) - apply_A(Rc);
        dy = schur_llt.solve(rhs);
      }
      const auto Atdy = apply_At(dy);
      dX.resize(nb_);
      dZ.resize(nb_);
      for (std::size_t bk = 0; bk < nb_; ++bk) {
        dZ[bk] = hermitian_part(Rd[bk] - Atdy[bk]);
        dX[bk] = hermitian_part(Rc[bk] - sc[bk].W * dZ[bk] * sc[bk].W);
      }
    };
    auto steps = [&](const std::vector<ComplexMatrix>& dX, const std::vector<ComplexMatrix>& dZ, double& ap,
                     double& ad) {
      ap = ad = std::numeric_limits<double>::infinity();
      for (std::size_t bk = 0; bk < nb_; ++bk) {
        ap = std::min(ap, max_step(sc[bk].Lx, dX[bk]));
        ad = std::min(ad, max_step(sc[bk].Lz, dZ[bk]));
      }
    };

    std::vector<ComplexMatrix> Rc(nb_), dX, dZ;
    RealVector dy;
    for (std::size_t bk = 0; bk < nb_; ++bk) Rc[bk] = -X[bk];
    direction(Rc, dX, dy, dZ);
    double ap, ad;
    steps(dX, dZ, ap, ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double xz_aff = 0;
    for (std::size_t bk = 0; bk < nb_; ++bk)
      xz_aff += ((X[bk] + ap * dX[bk]).cwiseProduct((Z[bk] + ad * dZ[bk]).transpose())).sum().real();
    const double mu_aff = std::max(0.0, xz_aff / nu_);
    const double expon = std::max(1.0, 3.0 * std::min(ap, ad) * std::min(ap, ad));
    const double sigma = std::min(1.0, std::pow(mu_aff / mu, expon));

    for (std::size_t bk = 0; bk < nb_; ++bk) {
      const auto& s_ = sc[bk];
      const std::size_t n = dims_[bk];
      const ComplexMatrix DX = s_.Ginv * dX[bk] * s_.Ginv.adjoint();
      const ComplexMatrix DZ = s_.G.adjoint() * dZ[bk] * s_.G;
      ComplexMatrix R = -0.5 * (DX * DZ + DZ * DX);
      for (std::size_t i = 0; i < n; ++i) R(i, i) += sigma * mu - s_.d(i) * s_.d(i);
      ComplexMatrix H(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) H(i, j) = 2.0 * R(i, j) / (s_.d(i) + s_.d(j));
      Rc[bk] = s_.G * H * s_.G.adjoint();
    }
    direction(Rc, dX, dy, dZ);
    steps(dX, dZ, ap, ad);
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);
    for (std::size_t bk = 0; bk < nb_; ++bk) {
      X[bk] = hermitian_part(X[bk] + ap * dX[bk]);
      Z[bk] = hermitian_part(Z[bk] + ad * dZ[bk]);
    }
    if (m > 0) y += ad * dy;
    tau = 0.9 + 0.09 * std::min(ap, ad);
    stalls = (std::max(ap, ad) < 1e-10) ? stalls + 1 : 0;
    if (stalls >= 5) return finish(Status::NumericalFailure, iter + 1, X, y, Z, std::move(trace));
  }
}

std::vector<ComplexMatrix> Solver::project(const std::vector<ComplexMatrix>& X) {
  if (!prune_redundant()) throw std::invalid_argument("project_affine: inconsistent equality constraints");
  if (rows_.empty()) return X;
  RealVector r = apply_A(X);
  for (std::size_t i = 0; i < rows_.size(); ++i) r(i) -= rows_[i].b;
  const auto corr = apply_At(gram_llt_.solve(r));
  std::vector<ComplexMatrix> out = X;
  for (std::size_t bk = 0; bk < nb_; ++bk) out[bk] = hermitian_part(out[bk] - corr[bk]);
  return out;
}

}  // namespace

void Problem::validate() const {
  if (block_dims.empty()) throw std::invalid_argument("sdp: problem has no blocks");
  if (objective.size() != block_dims.size()) throw std::invalid_argument("sdp: objective block count mismatch");
  for (std::size_t b = 0; b < block_dims.size(); ++b) {
    if (block_dims[b] == 0) throw std::invalid_argument("sdp: empty block");
    if (static_cast<std::size_t>(objective[b].rows()) != block_dims[b] ||
        static_cast<std::size_t>(objective[b].cols()) != block_dims[b])
      throw std::invalid_argument("sdp: objective block has wrong size");
    if (!is_hermitian(objective[b], 1e-10)) throw std::invalid_argument("sdp: objective block is not Hermitian");
  }
  for (const auto& c : constraints)
    for (const auto& part : c.parts) {
      if (part.block >= block_dims.size()) throw std::invalid_argument("sdp: constraint references unknown block");
      if (part.kron_identity == 0 || block_dims[part.block] % part.kron_identity != 0)
        throw std::invalid_argument("sdp: identity factor does not divide the block dimension");
    }
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::MaxIters: return "max_iters";
    case Status::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

Solution solve(const Problem& problem, const Options& options) { return Solver(problem, options).run(); }

std::vector<ComplexMatrix> project_affine(const Problem& problem, const std::vector<ComplexMatrix>& X) {
  return Solver(problem, {}).project(X);
}

double inner(const BlockPart& part, const ComplexMatrix& X) {
  return part_inner(part, reduce(X, std::max<std::size_t>(1, part.kron_identity)));
}

BlockPart sparse_part(std::size_t block, const ComplexMatrix& m, double drop_tol) {
  BlockPart p;
  p.block = block;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j)) > drop_tol)
        p.entries.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), m(i, j)});
  return p;
}

LmiSolution solve_lmi(const LmiProblem& lp, const Options& options) {
  const std::size_t nvar = static_cast<std::size_t>(lp.c.size());
  if (lp.mi.size() != nvar) throw std::invalid_argument("solve_lmi: coefficient count mismatch");
  const std::size_t nb = lp.block_dims.size();
  RealVector x0 = RealVector::Zero(nvar);
  Eigen::MatrixXd N = Eigen::MatrixXd::Identity(nvar, nvar);
  LmiSolution out;
  if (lp.a_eq.rows() > 0) {
    // Equalities orthonormalized by QR of A^T: x = x0 + N z with N spanning ker A.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lp.a_eq.transpose());
    qr.setThreshold(1e-10);
    const Eigen::Index r = qr.rank();
    if (r < lp.a_eq.rows()) spdlog::warn("solve_lmi: dropped {} redundant equality row(s)", lp.a_eq.rows() - r);
    x0 = lp.a_eq.completeOrthogonalDecomposition().solve(lp.b_eq);
    if ((lp.a_eq * x0 - lp.b_eq).norm() > 1e-8 * (1 + lp.b_eq.norm())) {
      out.status = Status::Infeasible;
      return out;
    }
    const Eigen::MatrixXd Q = qr.householderQ();
    N = Q.rightCols(static_cast<Eigen::Index>(nvar) - r);
  }
  Problem p;
  p.block_dims = lp.block_dims;
  p.objective = lp.m0;
  for (std::size_t i = 0; i < nvar; ++i)
    if (x0(i) != 0.0)
      for (std::size_t b = 0; b < nb; ++b) p.objective[b] += x0(i) * lp.mi[i][b];
  const RealVector cz = N.transpose() * lp.c;
  for (Eigen::Index j = 0; j < N.cols(); ++j) {
    Constraint con;
    con.rhs = -cz(j);
    for (std::size_t b = 0; b < nb; ++b) {
      ComplexMatrix m = ComplexMatrix::Zero(lp.block_dims[b], lp.block_dims[b]);
      for (std::size_t i = 0; i < nvar; ++i)
        if (N(i, j) != 0.0) m -= N(i, j) * lp.mi[i][b];
      BlockPart part = sparse_part(b, m);
      if (!part.entries.empty()) con.parts.push_back(std::move(part));
    }
    p.constraints.push_back(std::move(con));
  }
  const Solution s = solve(p, options);
  out.status = s.status;
  out.iterations = s.iterations;
  out.gap = s.gap;
  out.x = x0 + N * s.y;
  out.objective = lp.c.dot(out.x);
  return out;
}

RealVector svec(const ComplexMatrix& h) {
  const std::size_t n = static_cast<std::size_t>(h.rows());
  RealVector v(n * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) v(k++) = h(i, i).real();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      v(k++) = std::sqrt(2.0) * h(i, j).real();
      v(k++) = std::sqrt(2.0) * h(i, j).imag();
    }
  return v;
}

ComplexMatrix smat(const RealVector& v, std::size_t n) {
  if (static_cast<std::size_t>(v.size()) != n * n) throw std::invalid_argument("smat: length must be n^2");
  ComplexMatrix h = ComplexMatrix::Zero(n, n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) h(i, i) = v(k++);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const cplx z(v(k), v(k + 1));
      k += 2;
      h(i, j) = z / std::sqrt(2.0);
      h(j, i) = std::conj(z) / std::sqrt(2.0);
    }
  return h;
}

std::vector<ComplexMatrix> hermitian_basis(std::size_t n) {
  std::vector<ComplexMatrix> out;
  RealVector e = RealVector::Zero(n * n);
  for (std::size_t k = 0; k < n * n; ++k) {
    e.setZero();
    e(k) = 1.0;
    out.push_back(smat(e, n));
  }
  return out;
}

void write_dump(const Problem& p, std::ostream& os) {
  p.validate();
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  os << "qcomb-sdp 1\n";
  os << "blocks " << p.block_dims.size();
  for (auto d : p.block_dims) os << ' ' << d;
  os << '\n';
  std::size_t nnz = 0;
  for (const auto& c : p.objective) nnz += static_cast<std::size_t>((c.array() != cplx(0.0)).count());
  os << "objective " << nnz << '\n';
  for (std::size_t b = 0; b < p.objective.size(); ++b)
    for (Eigen::Index i = 0; i < p.objective[b].rows(); ++i)
      for (Eigen::Index j = 0; j < p.objective[b].cols(); ++j)
        if (p.objective[b](i, j) != cplx(0.0))
          os << b << ' ' << i << ' ' << j << ' ' << num(p.objective[b](i, j).real()) << ' '
             << num(p.objective[b](i, j).imag()) << '\n';
  os << "constraints " << p.constraints.size() << '\n';
  for (const auto& c : p.constraints) {
    os << "constraint " << num(c.rhs) << ' ' << c.parts.size() << '\n';
    for (const auto& part : c.parts) {
      os << "part " << part.block << ' ' << part.kron_identity << ' ' << part.entries.size() << '\n';
      for (const auto& e : part.entries)
        os << e.row << ' ' << e.col << ' ' << num(e.value.real()) << ' ' << num(e.value.imag()) << '\n';
    }
  }
  os << "end\n";
}

Problem read_dump(std::istream& is) {
  auto expect = [&](const std::string& word) {
    std::string w;
    if (!(is >> w) || w != word) throw std::runtime_error("sdp dump: expected '" + word + "'");
  };
  expect("qcomb-sdp");
  int version = 0;
  is >> version;
  if (version != 1) throw std::runtime_error("sdp dump: unsupported version");
  Problem p;
  expect("blocks");
  std::size_t nb = 0;
  is >> nb;
  p.block_dims.resize(nb);
  for (auto& d : p.block_dims) is >> d;
  for (auto d : p.block_dims) p.objective.push_back(ComplexMatrix::Zero(d, d));
  expect("objective");
  std::size_t nnz = 0;
  is >> nnz;
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t b, i, j;
    double re, im;
    is >> b >> i >> j >> re >> im;
    if (b >= nb || i >= p.block_dims[b] || j >= p.block_dims[b]) throw std::runtime_error("sdp dump: bad entry");
    p.objective[b](i, j) = cplx(re, im);
  }
  expect("constraints");
  std::size_t m = 0;
  is >> m;
  for (std::size_t c = 0; c < m; ++c) {
    expect("constraint");
    Constraint con;
    std::size_t np = 0;
    is >> con.rhs >> np;
    for (std::size_t k = 0; k < np; ++k) {
      expect("part");
      BlockPart part;
      std::size_t cnt = 0;
      is >> part.block >> part.kron_identity >> cnt;
      for (std::size_t e = 0; e < cnt; ++e) {
        std::size_t i, j;
        double re, im;
        is >> i >> j >> re >> im;
        part.entries.push_back({i, j, cplx(re, im)});
      }
      con.parts.push_back(std::move(part));
    }
    p.constraints.push_back(std::move(con));
  }
  expect("end");
  if (!is) throw std::runtime_error("sdp dump: truncated input");
  p.validate();
  return p;
}

}  // namespace qcomb::sdp
