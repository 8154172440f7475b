#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qcomb {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-12;

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix kron_all(const std::vector<ComplexMatrix>& factors);
ComplexMatrix identity(std::size_t d);
ComplexMatrix hermitian_part(const ComplexMatrix& m);
bool is_hermitian(const ComplexMatrix& m, double rel_tol = kHermitianTol);

struct EigenDecomposition {
  RealVector values;     // ascending
  ComplexMatrix vectors; // columns
};

// Throws std::invalid_argument if m is not Hermitian within rel_tol.
EigenDecomposition herm_eig(const ComplexMatrix& m, double rel_tol = kHermitianTol);

// A tensor leg. Operator legs are doubled: extent dim*dim, packed as dim*ket + bra.
struct Label {
  std::string name;
  std::size_t dim = 1;
  bool doubled = true;

  std::size_t extent() const { return doubled ? dim * dim : dim; }
  bool operator==(const Label&) const = default;
};

std::vector<Label> operator_labels(const std::vector<std::pair<std::string, std::size_t>>& subsystems);

class LabeledTensor {
 public:
  LabeledTensor() = default;
  LabeledTensor(std::vector<Label> labels, std::vector<cplx> data);

  static LabeledTensor scalar(cplx value);
  static LabeledTensor zeros(std::vector<Label> labels);
  // Rows and columns of m both run over the subsystems in order, first slowest.
  static LabeledTensor from_operator(const std::vector<Label>& subsystems, const ComplexMatrix& m);
  static LabeledTensor identity_operator(const std::vector<Label>& subsystems);

  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<cplx>& data() const { return data_; }
  std::vector<cplx>& data() { return data_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rank() const { return labels_.size(); }

  std::optional<std::size_t> find(const std::string& name) const;
  bool has(const std::string& name) const { return find(name).has_value(); }
  const Label& label(const std::string& name) const;
  std::vector<std::string> names() const;
  bool is_operator() const;
  std::size_t operator_dim() const;

  ComplexMatrix to_operator() const;
  ComplexMatrix to_operator(const std::vector<std::string>& order) const;
  cplx scalar_value() const;

  LabeledTensor permuted(const std::vector<std::string>& order) const;
  LabeledTensor relabeled(const std::string& from, const std::string& to) const;
  LabeledTensor conj() const;

  LabeledTensor& operator+=(const LabeledTensor& other);
  LabeledTensor& operator-=(const LabeledTensor& other);
  LabeledTensor& operator*=(cplx s);
  friend LabeledTensor operator+(LabeledTensor a, const LabeledTensor& b) { return a += b; }
  friend LabeledTensor operator-(LabeledTensor a, const LabeledTensor& b) { return a -= b; }
  friend LabeledTensor operator*(cplx s, LabeledTensor a) { return a *= s; }

  double norm() const;

 private:
  std::vector<Label> labels_;
  std::vector<cplx> data_;
};

LabeledTensor partial_trace(const LabeledTensor& t, const std::string& label);
LabeledTensor partial_trace(const LabeledTensor& t, const std::vector<std::string>& labels);
LabeledTensor partial_transpose(const LabeledTensor& t, const std::string& label);
LabeledTensor transpose_all(const LabeledTensor& t);

// Sums over each (label in a, label in b) pair. Remaining legs: a's then b's.
LabeledTensor contract(const LabeledTensor& a, const LabeledTensor& b,
                       const std::vector<std::pair<std::string, std::string>>& pairs);
// Contracts every label name the two tensors share.
LabeledTensor contract(const LabeledTensor& a, const LabeledTensor& b);

std::vector<std::string> shared_labels(const LabeledTensor& a, const LabeledTensor& b);
double max_abs_diff(const LabeledTensor& a, const LabeledTensor& b);
// Re sum a_ij conj(b_ij) after aligning label order; equals Re Tr(A B^dagger) for operators.
double real_inner(const LabeledTensor& a, const LabeledTensor& b);

std::vector<cplx> permute_data(const std::vector<cplx>& data, const std::vector<std::size_t>& extents,
                               const std::vector<std::size_t>& perm);

}  // namespace qcomb
