#include "qcomb/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <spdlog/spdlog.h>

#include "qcomb/analytic.hpp"

namespace qcomb::bench {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("csv: bad number '" + s + "'");
  return v;
}

template <class T>
T parse_uint(const std::string& s) {
  T v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("csv: bad integer '" + s + "'");
  return v;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string series_key(const ResultRow& r) { return r.model + "|" + fmt_double(r.p) + "|" + fmt_double(r.C); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#e6a100", "#2ca02c", "#9467bd", "#8c564b"};

}  // namespace

void ExperimentConfig::validate() const {
  model.validate();
  if (N.empty()) throw std::invalid_argument("config: N list is empty");
  if (d_A.empty()) throw std::invalid_argument("config: d_A list is empty");
  if (seeds.empty()) throw std::invalid_argument("config: seeds list is empty");
  for (auto n : N)
    if (n == 0) throw std::invalid_argument("config: N values must be positive");
  for (auto d : d_A)
    if (d == 0) throw std::invalid_argument("config: d_A values must be positive");
  iss.validate();
  if (csv.empty()) throw std::invalid_argument("config: csv output path is empty");
}

ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  const auto& m = j.at("model");
  c.model.variant = parse_variant(m.at("variant").get<std::string>());
  c.model.p = m.at("p").get<double>();
  c.model.C = m.value("C", 0.0);
  c.N = j.at("N").get<std::vector<std::size_t>>();
  c.d_A = j.at("d_A").get<std::vector<std::size_t>>();
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    c.iss.sdp.feas_tol = s.value("feas_tol", c.iss.sdp.feas_tol);
    c.iss.sdp.gap_tol = s.value("gap_tol", c.iss.sdp.gap_tol);
    c.iss.sdp.max_iters = s.value("max_iters", c.iss.sdp.max_iters);
  }
  if (j.contains("convergence")) {
    const auto& s = j.at("convergence");
    c.iss.threshold = s.value("threshold", c.iss.threshold);
    c.iss.window = s.value("window", c.iss.window);
    c.iss.max_sweeps = s.value("max_sweeps", c.iss.max_sweeps);
    c.iss.restarts = s.value("restarts", c.iss.restarts);
    c.iss.q0 = s.value("q0", c.iss.q0);
    c.iss.gamma = s.value("gamma", c.iss.gamma);
    c.iss.q_negligible = s.value("q_negligible", c.iss.q_negligible);
    c.iss.fixed_sweeps = s.value("fixed_sweeps", c.iss.fixed_sweeps);
  }
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  if (j.contains("output")) {
    const auto& o = j.at("output");
    if (o.contains("csv")) c.csv = resolve(o.at("csv").get<std::string>());
    if (o.contains("plot")) c.plot = resolve(o.at("plot").get<std::string>());
  }
  if (const char* e = std::getenv("QCOMB_CSV")) c.csv = e;
  if (const char* e = std::getenv("QCOMB_PLOT")) c.plot = e;
  c.workers = j.value("workers", 0u);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return config_from_json(nlohmann::json::parse(in, nullptr, true, true), path.parent_path());
}

std::string ResultRow::key() const {
  return model + "," + fmt_double(p) + "," + fmt_double(C) + "," + std::to_string(N) + "," + std::to_string(d_A) + "," +
         std::to_string(seed);
}

std::string csv_header() {
  return "model,p,C,N,d_A,seed,qfi,qfi_per_n,split_qfi_per_n,iterations,wall_ms,converged,status";
}

std::string to_csv(const ResultRow& r) {
  return quote(r.model) + "," + fmt_double(r.p) + "," + fmt_double(r.C) + "," + std::to_string(r.N) + "," +
         std::to_string(r.d_A) + "," + std::to_string(r.seed) + "," + fmt_double(r.qfi) + "," + fmt_double(r.qfi_per_n) + "," +
         fmt_double(r.split_qfi_per_n) + "," + std::to_string(r.iterations) + "," + fmt_double(r.wall_ms) + "," +
         (r.converged ? "1" : "0") + "," + quote(r.status);
}

ResultRow parse_csv_row(const std::string& line) {
  const auto f = split_fields(line);
  if (f.size() != 13) throw std::runtime_error("csv: expected 13 fields, got " + std::to_string(f.size()));
  ResultRow r;
  r.model = f[0];
  r.p = parse_double(f[1]);
  r.C = parse_double(f[2]);
  r.N = parse_uint<std::size_t>(f[3]);
  r.d_A = parse_uint<std::size_t>(f[4]);
  r.seed = parse_uint<std::uint64_t>(f[5]);
  r.qfi = parse_double(f[6]);
  r.qfi_per_n = parse_double(f[7]);
  r.split_qfi_per_n = parse_double(f[8]);
  r.iterations = parse_uint<int>(f[9]);
  r.wall_ms = parse_double(f[10]);
  if (f[11] != "0" && f[11] != "1") throw std::runtime_error("csv: converged must be 0 or 1");
  r.converged = f[11] == "1";
  r.status = f[12];
  return r;
}

std::vector<ResultRow> read_csv(const std::filesystem::path& path) {
  std::vector<ResultRow> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != csv_header()) throw std::runtime_error("csv: unexpected header in " + path.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      rows.push_back(parse_csv_row(line));
    } catch (const std::exception& e) {
      // A torn final line from an interrupted run is dropped and recomputed.
      spdlog::warn("skipping unreadable row in {}: {}", path.string(), e.what());
    }
  }
  return rows;
}

void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << csv_header() << '\n';
    for (const auto& r : rows) out << to_csv(r) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

std::map<std::size_t, double> best_split(const std::map<std::size_t, double>& f) {
  if (f.empty()) return {};
  // g[m]: best total over multisets of measured N summing to m; m itself need not be measured
  const std::size_t top = f.rbegin()->first;
  std::vector<double> g(top + 1, -1.0);
  g[0] = 0.0;
  for (std::size_t m = 1; m <= top; ++m)
    for (const auto& [n, fn] : f) {
      if (n > m) break;
      if (g[m - n] >= 0.0) g[m] = std::max(g[m], fn + g[m - n]);
    }
  std::map<std::size_t, double> s;
  for (const auto& [n, fn] : f) s[n] = std::max(fn, g[n]);
  return s;
}

void apply_split(std::vector<ResultRow>& rows) {
  std::map<std::pair<std::string, std::size_t>, std::map<std::size_t, double>> best;
  for (const auto& r : rows) {
    if (r.status != "ok" && r.status != "not_converged") continue;
    auto& table = best[{series_key(r), r.d_A}];
    auto it = table.find(r.N);
    if (it == table.end() || r.qfi > it->second) table[r.N] = r.qfi;
  }
  std::map<std::pair<std::string, std::size_t>, std::map<std::size_t, double>> split;
  for (const auto& [k, table] : best) split[k] = best_split(table);
  for (auto& r : rows) {
    const auto it = split.find({series_key(r), r.d_A});
    if (it == split.end() || !it->second.count(r.N)) {
      r.split_qfi_per_n = r.qfi_per_n;
      continue;
    }
    r.split_qfi_per_n = std::max(r.qfi_per_n, it->second.at(r.N) / static_cast<double>(r.N));
  }
}

ResultRow run_point(const ExperimentConfig& cfg, std::size_t N, std::size_t d_A, std::uint64_t seed) {
  ResultRow r;
  r.model = to_string(cfg.model.variant);
  r.p = cfg.model.p;
  r.C = cfg.model.C;
  r.N = N;
  r.d_A = d_A;
  r.seed = seed;
  IssConfig ic = cfg.iss;
  ic.d_A = d_A;
  ic.d_A_per_bond.clear();
  ic.seed = seed;
  try {
    const OptimizationResult res = optimize(cfg.model, N, ic);
    r.qfi = std::max(res.qfi, 0.0);
    r.qfi_per_n = r.qfi / static_cast<double>(N);
    r.split_qfi_per_n = r.qfi_per_n;
    r.iterations = res.sweeps;
    r.wall_ms = res.wall_seconds * 1e3;
    r.converged = res.converged || ic.fixed_sweeps > 0;
    r.status = r.converged ? "ok" : "not_converged";
  } catch (const std::exception& e) {
    r.status = std::string("error: ") + e.what();
    spdlog::error("grid point N={} d_A={} seed={} failed: {}", N, d_A, seed, e.what());
  }
  return r;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  struct Point {
    std::size_t N, d_A;
    std::uint64_t seed;
  };
  std::vector<Point> grid;
  for (auto d : cfg.d_A)
    for (auto n : cfg.N)
      for (auto s : cfg.seeds) grid.push_back({n, d, s});

  std::map<std::string, ResultRow> done;
  for (auto& r : read_csv(cfg.csv)) done[r.key()] = r;
  auto key_of = [&](const Point& pt) {
    ResultRow r;
    r.model = to_string(cfg.model.variant);
    r.p = cfg.model.p;
    r.C = cfg.model.C;
    r.N = pt.N;
    r.d_A = pt.d_A;
    r.seed = pt.seed;
    return r.key();
  };
  std::vector<Point> todo;
  for (const auto& pt : grid)
    if (!done.count(key_of(pt))) todo.push_back(pt);
  if (todo.size() < grid.size()) spdlog::info("resuming: {} of {} grid points already in {}", grid.size() - todo.size(), grid.size(), cfg.csv.string());

  // Make sure the file starts with a header and holds the reusable rows.
  {
    std::vector<ResultRow> existing;
    for (const auto& pt : grid)
      if (auto it = done.find(key_of(pt)); it != done.end()) existing.push_back(it->second);
    write_csv(cfg.csv, existing);
  }

  std::mutex write_mutex;
  std::ofstream appender(cfg.csv, std::ios::app);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < todo.size(); i = next++) {
      ResultRow r = run_point(cfg, todo[i].N, todo[i].d_A, todo[i].seed);
      std::lock_guard lock(write_mutex);
      appender << to_csv(r) << '\n' << std::flush;
      done[r.key()] = r;
      if (progress) progress(r);
    }
  };
  unsigned nw = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  nw = static_cast<unsigned>(std::min<std::size_t>(nw, std::max<std::size_t>(todo.size(), 1)));
  if (nw <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < nw; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  appender.close();

  std::vector<ResultRow> rows;
  for (const auto& pt : grid) rows.push_back(done.at(key_of(pt)));
  apply_split(rows);
  write_csv(cfg.csv, rows);
  if (!cfg.plot.empty()) {
    std::ofstream out(cfg.plot);
    if (!out) throw std::runtime_error("cannot write " + cfg.plot.string());
    out << emit_plot(rows);
  }
  return rows;
}

std::string emit_plot(const std::vector<ResultRow>& rows, const PlotStyle& style) {
  if (rows.empty()) throw std::invalid_argument("emit_plot: no rows");
  // Best seed per (d_A, N).
  std::map<std::size_t, std::map<std::size_t, std::pair<double, double>>> series;
  for (const auto& r : rows) {
    if (r.status.rfind("error", 0) == 0) continue;
    auto& pt = series[r.d_A][r.N];
    pt.first = std::max(pt.first, r.qfi_per_n);
    pt.second = std::max(pt.second, r.split_qfi_per_n);
  }
  const ResultRow& first = rows.front();
  std::optional<double> bound;
  if (style.bound && first.p > 0.0 && first.p < 1.0 &&
      (first.model == "DephasingParallel" || first.model == "CorrelatedDephasing"))
    bound = parallel_dephasing_bound(1, first.p);

  double xmin = 1e300, xmax = -1e300, ymax = 0.0;
  for (const auto& [d, pts] : series)
    for (const auto& [n, v] : pts) {
      xmin = std::min(xmin, static_cast<double>(n));
      xmax = std::max(xmax, static_cast<double>(n));
      ymax = std::max({ymax, v.first, style.split ? v.second : 0.0});
    }
  if (bound) ymax = std::max(ymax, *bound);
  if (series.empty()) xmin = xmax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax <= 0) ymax = 1;
  ymax *= 1.1;

  const double ml = 60, mr = 110, mt = 36, mb = 46;
  const double pw = style.width - ml - mr, ph = style.height - mt - mb;
  auto X = [&](double n) { return ml + (n - xmin) / (xmax - xmin) * pw; };
  auto Y = [&](double v) { return mt + ph - v / ymax * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\"" << style.height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::string title = style.title.empty() ? first.model + " p=" + fmt_double(first.p) +
                                                      (first.model == "CorrelatedDephasing" ? " C=" + fmt_double(first.C) : "")
                                                : style.title;
  s << "<text x=\"" << num(ml + pw / 2) << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  s << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt + ph) << "\" x2=\"" << num(ml + pw) << "\" y2=\"" << num(mt + ph)
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(ml) << "\" y2=\"" << num(mt + ph)
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = ymax * i / 5.0;
    s << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(Y(v) + 4) << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  const std::size_t step = std::max<std::size_t>(1, static_cast<std::size_t>((xmax - xmin) / 10.0));
  for (std::size_t n = static_cast<std::size_t>(xmin); n <= static_cast<std::size_t>(xmax); n += step)
    s << "<text x=\"" << num(X(static_cast<double>(n))) << "\" y=\"" << num(mt + ph + 16) << "\" text-anchor=\"middle\">" << n
      << "</text>\n";
  s << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(style.height - 8.0) << "\" text-anchor=\"middle\">N</text>\n";
  s << "<text x=\"14\" y=\"" << num(mt + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << num(mt + ph / 2)
    << ")\">F/N</text>\n";
  if (bound) {
    s << "<line x1=\"" << num(ml) << "\" y1=\"" << num(Y(*bound)) << "\" x2=\"" << num(ml + pw) << "\" y2=\"" << num(Y(*bound))
      << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    s << "<text x=\"" << num(ml + pw + 6) << "\" y=\"" << num(Y(*bound) + 4) << "\">bound</text>\n";
  }
  std::size_t ci = 0;
  for (const auto& [d, pts] : series) {
    const char* color = kPalette[ci++ % std::size(kPalette)];
    std::string main, dashed;
    for (const auto& [n, v] : pts) {
      main += num(X(static_cast<double>(n))) + "," + num(Y(v.first)) + " ";
      dashed += num(X(static_cast<double>(n))) + "," + num(Y(v.second)) + " ";
    }
    main.pop_back();
    dashed.pop_back();
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << main << "\"/>\n";
    for (const auto& [n, v] : pts)
      s << "<circle cx=\"" << num(X(static_cast<double>(n))) << "\" cy=\"" << num(Y(v.first)) << "\" r=\"3\" fill=\"" << color
        << "\"/>\n";
    if (style.split)
      s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-dasharray=\"5,4\" points=\"" << dashed << "\"/>\n";
    const double ly = mt + 16.0 * static_cast<double>(ci);
    s << "<line x1=\"" << num(ml + pw + 6) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(ml + pw + 26) << "\" y2=\"" << num(ly)
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << num(ml + pw + 30) << "\" y=\"" << num(ly + 4) << "\">d_A=" << d << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace qcomb::bench
