#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qcomb/tensor.hpp"

namespace qcomb::sdp {

// Conic standard form over Hermitian blocks, inner product <A,X> = Re Tr(AX):
//   primal   minimize <C,X>  s.t. <A_i,X> = b_i,  X >= 0
//   dual     maximize b'y    s.t. Z = C - sum_i y_i A_i >= 0
// The dual is the affine LMI view; solve_lmi() adds free-variable equalities on top of it.

struct Entry {
  std::size_t row = 0;
  std::size_t col = 0;
  cplx value;
};

// Restriction of a Hermitian constraint matrix to one block: (entries) (x) 1_{kron_identity}.
// Entries index the reduced space of size dim/kron_identity and may list one or both
// triangles; they are Hermitian-symmetrized when the problem is solved.
struct BlockPart {
  std::size_t block = 0;
  std::vector<Entry> entries;
  std::size_t kron_identity = 1;
};

struct Constraint {
  std::vector<BlockPart> parts;
  double rhs = 0.0;
};

struct Problem {
  std::vector<std::size_t> block_dims;
  std::vector<ComplexMatrix> objective;
  std::vector<Constraint> constraints;

  void validate() const;
};

enum class Status { Optimal, Infeasible, MaxIters, NumericalFailure };
std::string to_string(Status s);

struct Options {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iters = 200;
  bool keep_trace = false;
};

struct IterateRecord {
  int iteration = 0;
  double primal_objective = 0;
  double dual_objective = 0;
  double primal_infeasibility = 0;
  double dual_infeasibility = 0;
  double mu = 0;
};

struct Solution {
  Status status = Status::NumericalFailure;
  std::vector<ComplexMatrix> X;
  std::vector<ComplexMatrix> Z;
  RealVector y;
  double primal_objective = 0;
  double dual_objective = 0;
  double gap = 0;  // |pobj - dobj| / (1 + |pobj| + |dobj|)
  double primal_infeasibility = 0;
  double dual_infeasibility = 0;
  int iterations = 0;
  bool primal_infeasible = false;  // certificate found that no feasible X exists
  bool dual_infeasible = false;
  std::vector<std::size_t> dropped_constraints;
  std::vector<IterateRecord> trace;
};

Solution solve(const Problem& problem, const Options& options = {});

// Orthogonal projection of X onto {X : <A_i,X> = b_i} (no PSD enforcement).
std::vector<ComplexMatrix> project_affine(const Problem& problem, const std::vector<ComplexMatrix>& X);

double inner(const BlockPart& part, const ComplexMatrix& X);
BlockPart sparse_part(std::size_t block, const ComplexMatrix& m, double drop_tol = 0.0);

// LMI form: minimize c'x  s.t.  M0 + sum_i x_i M_i >= 0 (blockwise),  A x = b.
struct LmiProblem {
  std::vector<std::size_t> block_dims;
  RealVector c;
  std::vector<ComplexMatrix> m0;
  std::vector<std::vector<ComplexMatrix>> mi;  // mi[i][block]
  Eigen::MatrixXd a_eq;
  RealVector b_eq;
};

struct LmiSolution {
  Status status = Status::NumericalFailure;
  RealVector x;
  double objective = 0;
  double gap = 0;
  int iterations = 0;
};

LmiSolution solve_lmi(const LmiProblem& problem, const Options& options = {});

// Isometric packing of an n x n Hermitian matrix into n^2 reals:
// diagonal, then sqrt(2) Re and sqrt(2) Im of the strict upper triangle, row by row.
RealVector svec(const ComplexMatrix& h);
ComplexMatrix smat(const RealVector& v, std::size_t n);
// Orthonormal Hermitian basis matching the svec coordinates.
std::vector<ComplexMatrix> hermitian_basis(std::size_t n);

// Text dump; see docs/sdp_dump_format.md.
void write_dump(const Problem& problem, std::ostream& os);
Problem read_dump(std::istream& is);

}  // namespace qcomb::sdp
