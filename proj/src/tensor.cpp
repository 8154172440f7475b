#include "qcomb/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace qcomb {

namespace {

using RowMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::size_t product_of_extents(const std::vector<Label>& labels) {
  std::size_t n = 1;
  for (const auto& l : labels) n *= l.extent();
  return n;
}

void check_unique(const std::vector<Label>& labels) {
  std::unordered_set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l.name).second) throw std::invalid_argument("duplicate tensor label " + l.name);
  }
}

std::size_t index_or_throw(const LabeledTensor& t, const std::string& name) {
  auto i = t.find(name);
  if (!i) throw std::invalid_argument("unknown tensor label " + name);
  return *i;
}

// Splits the legs into (outer, leg, inner) extents around position p.
std::pair<std::size_t, std::size_t> outer_inner(const std::vector<Label>& labels, std::size_t p) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < p; ++i) outer *= labels[i].extent();
  for (std::size_t i = p + 1; i < labels.size(); ++i) inner *= labels[i].extent();
  return {outer, inner};
}

}  // namespace

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

ComplexMatrix kron_all(const std::vector<ComplexMatrix>& factors) {
  ComplexMatrix out = ComplexMatrix::Ones(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

ComplexMatrix identity(std::size_t d) { return ComplexMatrix::Identity(d, d); }

ComplexMatrix hermitian_part(const ComplexMatrix& m) { return (m + m.adjoint()) * 0.5; }

bool is_hermitian(const ComplexMatrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).norm() <= rel_tol * m.norm();
}

EigenDecomposition herm_eig(const ComplexMatrix& m, double rel_tol) {
  if (!is_hermitian(m, rel_tol)) throw std::invalid_argument("herm_eig: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(m));
  if (es.info() != Eigen::Success) throw std::runtime_error("herm_eig: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

std::vector<Label> operator_labels(const std::vector<std::pair<std::string, std::size_t>>& subsystems) {
  std::vector<Label> out;
  out.reserve(subsystems.size());
  for (const auto& [name, dim] : subsystems) out.push_back({name, dim, true});
  return out;
}

std::vector<cplx> permute_data(const std::vector<cplx>& data, const std::vector<std::size_t>& extents,
                               const std::vector<std::size_t>& perm) {
  const std::size_t r = extents.size();
  bool trivial = true;
  for (std::size_t i = 0; i < r; ++i) trivial = trivial && perm[i] == i;
  if (trivial) return data;

  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * extents[i];
  std::vector<std::size_t> out_ext(r), stride(r);
  for (std::size_t j = 0; j < r; ++j) {
    out_ext[j] = extents[perm[j]];
    stride[j] = in_stride[perm[j]];
  }
  std::vector<cplx> out(data.size());
  if (data.empty()) return out;
  // Innermost output leg runs in a tight loop; the rest is an odometer.
  std::vector<std::size_t> idx(r, 0);
  const std::size_t last_ext = r ? out_ext[r - 1] : 1;
  const std::size_t last_stride = r ? stride[r - 1] : 0;
  std::size_t offset = 0, o = 0;
  while (o < out.size()) {
    for (std::size_t k = 0; k < last_ext; ++k) out[o++] = data[offset + k * last_stride];
    if (r < 2) break;
    std::size_t j = r - 1;
    while (j-- > 0) {
      ++idx[j];
      offset += stride[j];
      if (idx[j] < out_ext[j]) break;
      offset -= stride[j] * idx[j];
      idx[j] = 0;
    }
  }
  return out;
}

LabeledTensor::LabeledTensor(std::vector<Label> labels, std::vector<cplx> data)
    : labels_(std::move(labels)), data_(std::move(data)) {
  check_unique(labels_);
  if (product_of_extents(labels_) != data_.size())
    throw std::invalid_argument("LabeledTensor: label extents do not match data length");
}

LabeledTensor LabeledTensor::scalar(cplx value) { return LabeledTensor({}, {value}); }

LabeledTensor LabeledTensor::zeros(std::vector<Label> labels) {
  const std::size_t n = product_of_extents(labels);
  return LabeledTensor(std::move(labels), std::vector<cplx>(n, 0.0));
}

LabeledTensor LabeledTensor::from_operator(const std::vector<Label>& subsystems, const ComplexMatrix& m) {
  std::size_t d = 1;
  for (const auto& l : subsystems) {
    if (!l.doubled) throw std::invalid_argument("from_operator: labels must be operator-shaped");
    d *= l.dim;
  }
  if (static_cast<std::size_t>(m.rows()) != d || static_cast<std::size_t>(m.cols()) != d)
    throw std::invalid_argument("from_operator: matrix size does not match labels");
  const std::size_t n = subsystems.size();
  std::vector<cplx> flat(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) flat[i * d + j] = m(i, j);
  std::vector<std::size_t> extents, perm;
  for (const auto& l : subsystems) extents.push_back(l.dim);
  for (const auto& l : subsystems) extents.push_back(l.dim);
  for (std::size_t i = 0; i < n; ++i) {
    perm.push_back(i);
    perm.push_back(n + i);
  }
  return LabeledTensor(subsystems, permute_data(flat, extents, perm));
}

LabeledTensor LabeledTensor::identity_operator(const std::vector<Label>& subsystems) {
  std::size_t d = 1;
  for (const auto& l : subsystems) d *= l.dim;
  return from_operator(subsystems, ComplexMatrix::Identity(d, d));
}

std::optional<std::size_t> LabeledTensor::find(const std::string& name) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i].name == name) return i;
  return std::nullopt;
}

const Label& LabeledTensor::label(const std::string& name) const { return labels_[index_or_throw(*this, name)]; }

std::vector<std::string> LabeledTensor::names() const {
  std::vector<std::string> out;
  for (const auto& l : labels_) out.push_back(l.name);
  return out;
}

bool LabeledTensor::is_operator() const {
  return std::all_of(labels_.begin(), labels_.end(), [](const Label& l) { return l.doubled; });
}

std::size_t LabeledTensor::operator_dim() const {
  std::size_t d = 1;
  for (const auto& l : labels_) d *= l.dim;
  return d;
}

ComplexMatrix LabeledTensor::to_operator() const {
  if (!is_operator()) throw std::invalid_argument("to_operator: tensor has non-operator legs");
  const std::size_t n = labels_.size();
  std::vector<std::size_t> extents, perm;
  for (const auto& l : labels_) {
    extents.push_back(l.dim);
    extents.push_back(l.dim);
  }
  for (std::size_t i = 0; i < n; ++i) perm.push_back(2 * i);
  for (std::size_t i = 0; i < n; ++i) perm.push_back(2 * i + 1);
  const auto flat = permute_data(data_, extents, perm);
  const std::size_t d = operator_dim();
  return Eigen::Map<const RowMatrix>(flat.data(), d, d);
}

ComplexMatrix LabeledTensor::to_operator(const std::vector<std::string>& order) const {
  return permuted(order).to_operator();
}

cplx LabeledTensor::scalar_value() const {
  if (!labels_.empty()) throw std::invalid_argument("scalar_value: tensor has open legs");
  return data_[0];
}

LabeledTensor LabeledTensor::permuted(const std::vector<std::string>& order) const {
  if (order.size() != labels_.size()) throw std::invalid_argument("permuted: label count mismatch");
  std::vector<std::size_t> perm, extents;
  std::vector<Label> out_labels;
  for (const auto& name : order) {
    const auto p = index_or_throw(*this, name);
    perm.push_back(p);
    out_labels.push_back(labels_[p]);
  }
  for (const auto& l : labels_) extents.push_back(l.extent());
  return LabeledTensor(std::move(out_labels), permute_data(data_, extents, perm));
}

LabeledTensor LabeledTensor::relabeled(const std::string& from, const std::string& to) const {
  LabeledTensor out = *this;
  out.labels_[index_or_throw(*this, from)].name = to;
  check_unique(out.labels_);
  return out;
}

LabeledTensor LabeledTensor::conj() const {
  LabeledTensor out = *this;
  for (auto& v : out.data_) v = std::conj(v);
  return out;
}

LabeledTensor& LabeledTensor::operator+=(const LabeledTensor& other) {
  const LabeledTensor aligned = other.labels_ == labels_ ? other : other.permuted(names());
  if (aligned.labels_ != labels_) throw std::invalid_argument("tensor sum: label mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += aligned.data_[i];
  return *this;
}

LabeledTensor& LabeledTensor::operator-=(const LabeledTensor& other) {
  const LabeledTensor aligned = other.labels_ == labels_ ? other : other.permuted(names());
  if (aligned.labels_ != labels_) throw std::invalid_argument("tensor difference: label mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= aligned.data_[i];
  return *this;
}

LabeledTensor& LabeledTensor::operator*=(cplx s) {
  for (auto& v : data_) v *= s;
  return *this;
}

double LabeledTensor::norm() const {
  double s = 0;
  for (const auto& v : data_) s += std::norm(v);
  return std::sqrt(s);
}

LabeledTensor partial_trace(const LabeledTensor& t, const std::string& name) {
  const std::size_t p = index_or_throw(t, name);
  const Label& l = t.labels()[p];
  if (!l.doubled) throw std::invalid_argument("partial_trace: label " + name + " is not operator-shaped");
  const auto [outer, inner] = outer_inner(t.labels(), p);
  const std::size_t d = l.dim, ext = l.extent();
  std::vector<cplx> out(outer * inner, 0.0);
  const auto& in = t.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < d; ++i) {
      const cplx* src = &in[(o * ext + i * (d + 1)) * inner];
      cplx* dst = &out[o * inner];
      for (std::size_t k = 0; k < inner; ++k) dst[k] += src[k];
    }
  std::vector<Label> labels = t.labels();
  labels.erase(labels.begin() + static_cast<std::ptrdiff_t>(p));
  return LabeledTensor(std::move(labels), std::move(out));
}

LabeledTensor partial_trace(const LabeledTensor& t, const std::vector<std::string>& names) {
  LabeledTensor out = t;
  for (const auto& n : names) out = partial_trace(out, n);
  return out;
}

LabeledTensor partial_transpose(const LabeledTensor& t, const std::string& name) {
  const std::size_t p = index_or_throw(t, name);
  const Label& l = t.labels()[p];
  if (!l.doubled) throw std::invalid_argument("partial_transpose: label " + name + " is not operator-shaped");
  const auto [outer, inner] = outer_inner(t.labels(), p);
  const std::size_t d = l.dim;
  const auto& in = t.data();
  std::vector<cplx> out(in.size());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const cplx* src = &in[((o * d + i) * d + j) * inner];
        cplx* dst = &out[((o * d + j) * d + i) * inner];
        std::copy(src, src + inner, dst);
      }
  return LabeledTensor(t.labels(), std::move(out));
}

LabeledTensor transpose_all(const LabeledTensor& t) {
  LabeledTensor out = t;
  for (const auto& l : t.labels()) out = partial_transpose(out, l.name);
  return out;
}

LabeledTensor contract(const LabeledTensor& a, const LabeledTensor& b,
                       const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<std::size_t> ca, cb;
  std::size_t inner = 1;
  for (const auto& [na, nb] : pairs) {
    const std::size_t ia = index_or_throw(a, na), ib = index_or_throw(b, nb);
    if (a.labels()[ia].extent() != b.labels()[ib].extent() || a.labels()[ia].doubled != b.labels()[ib].doubled)
      throw std::invalid_argument("contract: dimension mismatch on " + na + "/" + nb);
    ca.push_back(ia);
    cb.push_back(ib);
    inner *= a.labels()[ia].extent();
  }
  std::vector<std::size_t> perm_a, perm_b, ext_a, ext_b;
  std::vector<Label> out_labels;
  std::size_t rows = 1, cols = 1;
  for (std::size_t i = 0; i < a.rank(); ++i) {
    ext_a.push_back(a.labels()[i].extent());
    if (std::find(ca.begin(), ca.end(), i) == ca.end()) {
      perm_a.push_back(i);
      out_labels.push_back(a.labels()[i]);
      rows *= a.labels()[i].extent();
    }
  }
  perm_a.insert(perm_a.end(), ca.begin(), ca.end());
  perm_b = cb;
  for (std::size_t i = 0; i < b.rank(); ++i) {
    ext_b.push_back(b.labels()[i].extent());
    if (std::find(cb.begin(), cb.end(), i) == cb.end()) {
      perm_b.push_back(i);
      out_labels.push_back(b.labels()[i]);
      cols *= b.labels()[i].extent();
    }
  }
  check_unique(out_labels);
  const auto da = permute_data(a.data(), ext_a, perm_a);
  const auto db = permute_data(b.data(), ext_b, perm_b);
  std::vector<cplx> out(rows * cols);
  Eigen::Map<RowMatrix> mo(out.data(), rows, cols);
  mo.noalias() = Eigen::Map<const RowMatrix>(da.data(), rows, inner) * Eigen::Map<const RowMatrix>(db.data(), inner, cols);
  return LabeledTensor(std::move(out_labels), std::move(out));
}

std::vector<std::string> shared_labels(const LabeledTensor& a, const LabeledTensor& b) {
  std::vector<std::string> out;
  for (const auto& l : a.labels())
    if (b.has(l.name)) out.push_back(l.name);
  return out;
}

LabeledTensor contract(const LabeledTensor& a, const LabeledTensor& b) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& n : shared_labels(a, b)) pairs.emplace_back(n, n);
  return contract(a, b, pairs);
}

double max_abs_diff(const LabeledTensor& a, const LabeledTensor& b) {
  const LabeledTensor bb = b.permuted(a.names());
  if (bb.labels() != a.labels()) throw std::invalid_argument("max_abs_diff: label mismatch");
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - bb.data()[i]));
  return m;
}

double real_inner(const LabeledTensor& a, const LabeledTensor& b) {
  const LabeledTensor bb = b.labels() == a.labels() ? b : b.permuted(a.names());
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.data()[i] * std::conj(bb.data()[i])).real();
  return s;
}

}  // namespace qcomb
