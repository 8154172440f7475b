#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcomb/channels.hpp"
#include "qcomb/tn_iss.hpp"

namespace qcomb::bench {

struct ExperimentConfig {
  NoiseModelSpec model;
  std::vector<std::size_t> N;
  std::vector<std::size_t> d_A;
  std::vector<std::uint64_t> seeds{1};
  IssConfig iss;  // d_A and seed are set per grid point
  std::filesystem::path csv = "results.csv";
  std::filesystem::path plot;  // empty: no plot
  unsigned workers = 0;        // 0: hardware concurrency

  void validate() const;
};

// Reads the JSON config; QCOMB_CSV and QCOMB_PLOT override the output paths.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct ResultRow {
  std::string model;
  double p = 0;
  double C = 0;
  std::size_t N = 0;
  std::size_t d_A = 0;
  std::uint64_t seed = 0;
  double qfi = 0;
  double qfi_per_n = 0;
  double split_qfi_per_n = 0;
  int iterations = 0;
  double wall_ms = 0;
  bool converged = false;
  std::string status;  // "ok", "not_converged" or the failure message

  std::string key() const;
  bool operator==(const ResultRow&) const = default;
};

std::string csv_header();
std::string to_csv(const ResultRow& r);
ResultRow parse_csv_row(const std::string& line);
std::vector<ResultRow> read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);

// F_split(N): best total of independent repetitions whose sizes are N values present in f.
std::map<std::size_t, double> best_split(const std::map<std::size_t, double>& f);

// Fills split_qfi_per_n per (model, p, C, d_A) from the best seed at each N.
void apply_split(std::vector<ResultRow>& rows);

using ProgressFn = std::function<void(const ResultRow&)>;

// Runs every missing grid point, appending rows to cfg.csv as they finish, then rewrites the
// file in grid order with split columns filled. Rows already in the file are reused.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

ResultRow run_point(const ExperimentConfig& cfg, std::size_t N, std::size_t d_A, std::uint64_t seed);

struct PlotStyle {
  std::string title;
  int width = 640;
  int height = 420;
  bool bound = true;
  bool split = true;
};

std::string emit_plot(const std::vector<ResultRow>& rows, const PlotStyle& style = {});

}  // namespace qcomb::bench
