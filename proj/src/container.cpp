#include "qcomb/container.hpp"

#include <fstream>
#include <stdexcept>

namespace qcomb::container {

namespace {

Json header(const char* kind) { return Json{{"format", kFormat}, {"version", kVersion}, {"kind", kind}}; }

Json complex_array(const cplx* data, std::size_t n) {
  Json a = Json::array();
  for (std::size_t i = 0; i < n; ++i) a.push_back(Json::array({data[i].real(), data[i].imag()}));
  return a;
}

std::vector<cplx> complex_values(const Json& a) {
  if (!a.is_array()) throw std::runtime_error("container: data must be an array of [re, im] pairs");
  std::vector<cplx> v;
  v.reserve(a.size());
  for (const auto& e : a) {
    if (!e.is_array() || e.size() != 2) throw std::runtime_error("container: malformed complex entry");
    v.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return v;
}

void expect_kind(const Json& j, const std::string& kind) {
  const std::string k = kind_of(j);
  if (k != kind) throw std::runtime_error("container: expected kind '" + kind + "', found '" + k + "'");
}

KrausSet kraus_from_json(const Json& j) {
  KrausSet k;
  k.d_in = j.at("d_in").get<std::size_t>();
  k.d_out = j.at("d_out").get<std::size_t>();
  for (const auto& m : j.at("operators")) {
    ComplexMatrix op = matrix_from_json(m);
    if (static_cast<std::size_t>(op.rows()) != k.d_out || static_cast<std::size_t>(op.cols()) != k.d_in)
      throw std::runtime_error("container: Kraus operator shape does not match d_out x d_in");
    k.operators.push_back(std::move(op));
  }
  if (k.operators.empty()) throw std::runtime_error("container: tooth without Kraus operators");
  return k;
}

}  // namespace

Json tensor_to_json(const LabeledTensor& t) {
  Json labels = Json::array();
  for (const auto& l : t.labels()) labels.push_back({{"name", l.name}, {"dim", l.dim}, {"doubled", l.doubled}});
  return {{"labels", labels}, {"data", complex_array(t.data().data(), t.size())}};
}

LabeledTensor tensor_from_json(const Json& j) {
  std::vector<Label> labels;
  for (const auto& l : j.at("labels")) labels.push_back({l.at("name").get<std::string>(), l.at("dim").get<std::size_t>(), l.value("doubled", true)});
  return LabeledTensor(std::move(labels), complex_values(j.at("data")));
}

Json matrix_to_json(const ComplexMatrix& m) {
  std::vector<cplx> rows;
  rows.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) rows.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", complex_array(rows.data(), rows.size())}};
}

ComplexMatrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
  const auto v = complex_values(j.at("data"));
  if (static_cast<Eigen::Index>(v.size()) != rows * cols) throw std::runtime_error("container: matrix data size mismatch");
  ComplexMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  return m;
}

Json to_json(const Strategy& s) {
  Json j = header("strategy");
  j["N"] = s.N;
  j["d_probe"] = s.d_probe;
  j["d_A"] = s.d_A;
  Json teeth = Json::array();
  for (const auto& t : s.teeth) teeth.push_back(tensor_to_json(t));
  j["teeth"] = teeth;
  return j;
}

Json to_json(const Comb& c) {
  Json j = header("comb");
  j["N"] = c.N;
  j["d_probe"] = c.d_probe;
  j["d_out_ancilla"] = c.d_out_ancilla;
  j["P"] = tensor_to_json(c.P);
  return j;
}

Json to_json(const KrausStrategy& k) {
  Json j = header("kraus-strategy");
  j["name"] = k.name;
  j["d_probe"] = k.d_probe;
  Json teeth = Json::array();
  for (const auto& t : k.teeth) {
    Json ops = Json::array();
    for (const auto& op : t.operators) ops.push_back(matrix_to_json(op));
    teeth.push_back({{"d_in", t.d_in}, {"d_out", t.d_out}, {"operators", ops}});
  }
  j["teeth"] = teeth;
  return j;
}

Json to_json(const IsometrySequence& v) {
  Json j = header("isometries");
  j["N"] = v.N;
  j["d_probe"] = v.d_probe;
  j["d_out_ancilla"] = v.d_out_ancilla;
  j["ancilla_dims"] = v.ancilla_dims;
  j["residual"] = v.residual;
  j["rank_ambiguous"] = v.rank_ambiguous;
  Json vs = Json::array();
  for (const auto& m : v.V) vs.push_back(matrix_to_json(m));
  j["V"] = vs;
  return j;
}

std::string kind_of(const Json& j) {
  if (!j.is_object() || j.value("format", "") != kFormat) throw std::runtime_error("container: not a qcomb-container document");
  const int version = j.value("version", 0);
  if (version != kVersion) throw std::runtime_error("container: unsupported version " + std::to_string(version));
  return j.at("kind").get<std::string>();
}

Strategy strategy_from_json(const Json& j) {
  expect_kind(j, "strategy");
  Strategy s;
  s.N = j.at("N").get<std::size_t>();
  s.d_probe = j.at("d_probe").get<std::size_t>();
  s.d_A = j.at("d_A").get<std::vector<std::size_t>>();
  for (const auto& t : j.at("teeth")) s.teeth.push_back(tensor_from_json(t));
  if (s.teeth.size() != s.N || s.d_A.size() != s.N) throw std::runtime_error("container: strategy tooth count does not match N");
  for (std::size_t k = 1; k <= s.N; ++k) s.teeth[k - 1] = s.teeth[k - 1].permuted(s.tooth_order(k));
  return s;
}

Comb comb_from_json(const Json& j) {
  expect_kind(j, "comb");
  Comb c;
  c.N = j.at("N").get<std::size_t>();
  c.d_probe = j.at("d_probe").get<std::size_t>();
  c.d_out_ancilla = j.at("d_out_ancilla").get<std::size_t>();
  c.P = tensor_from_json(j.at("P")).permuted(c.order());
  return c;
}

KrausStrategy kraus_strategy_from_json(const Json& j) {
  expect_kind(j, "kraus-strategy");
  KrausStrategy k;
  k.name = j.value("name", "");
  k.d_probe = j.at("d_probe").get<std::size_t>();
  for (const auto& t : j.at("teeth")) k.teeth.push_back(kraus_from_json(t));
  return k;
}

IsometrySequence isometries_from_json(const Json& j) {
  expect_kind(j, "isometries");
  IsometrySequence v;
  v.N = j.at("N").get<std::size_t>();
  v.d_probe = j.at("d_probe").get<std::size_t>();
  v.d_out_ancilla = j.at("d_out_ancilla").get<std::size_t>();
  v.ancilla_dims = j.at("ancilla_dims").get<std::vector<std::size_t>>();
  v.residual = j.value("residual", 0.0);
  v.rank_ambiguous = j.value("rank_ambiguous", false);
  for (const auto& m : j.at("V")) v.V.push_back(matrix_from_json(m));
  return v;
}

Json read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("container: cannot open " + path.string());
  return Json::parse(in);
}

void write_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("container: cannot write " + path.string());
  out << j.dump(1) << '\n';
}

}  // namespace qcomb::container
