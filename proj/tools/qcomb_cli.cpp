#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "qcomb/analytic.hpp"
#include "qcomb/bench.hpp"
#include "qcomb/comb.hpp"
#include "qcomb/container.hpp"

using namespace qcomb;
namespace fs = std::filesystem;

namespace {

struct ModelFlags {
  std::string variant = "DephasingParallel";
  double p = 1.0;
  double C = 0.0;

  void add(CLI::App* app) {
    app->add_option("--model", variant, "DephasingParallel, DephasingPerp, DampingParallel, DampingPerp or CorrelatedDephasing");
    app->add_option("--p", p, "noise parameter");
    app->add_option("--C", C, "register correlation (CorrelatedDephasing)");
  }
  NoiseModelSpec spec() const {
    NoiseModelSpec m;
    m.variant = parse_variant(variant);
    m.p = p;
    m.C = C;
    m.validate();
    return m;
  }
};

Strategy load_any_strategy(const fs::path& path) {
  const auto j = container::read_file(path);
  const std::string kind = container::kind_of(j);
  if (kind == "strategy") return container::strategy_from_json(j);
  if (kind == "kraus-strategy") return strategy_from_kraus(container::kraus_strategy_from_json(j));
  throw std::runtime_error("expected a strategy or kraus-strategy file, got " + kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive channel-estimation protocols: optimization, evaluation and bounds"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log", log_level, "trace, debug, info, warn, error or off");

  // optimize
  auto* opt = app.add_subcommand("optimize", "run the tensor-network see-saw over an (N, d_A, seed) grid");
  std::string cfg_path, csv_override, plot_override;
  ModelFlags opt_model;
  std::vector<std::size_t> opt_N, opt_dA;
  std::vector<std::uint64_t> opt_seeds;
  unsigned opt_workers = 0;
  int opt_restarts = -1;
  double opt_threshold = -1;
  opt->add_option("--config", cfg_path, "JSON experiment config");
  opt_model.add(opt);
  opt->add_option("--N", opt_N, "N values (without --config)");
  opt->add_option("--dA", opt_dA, "ancilla dimensions (without --config)");
  opt->add_option("--seeds", opt_seeds, "seeds");
  opt->add_option("--csv", csv_override, "CSV output path");
  opt->add_option("--plot", plot_override, "SVG output path");
  opt->add_option("--workers", opt_workers, "worker threads (0 = hardware)");
  opt->add_option("--restarts", opt_restarts, "random restarts per point");
  opt->add_option("--threshold", opt_threshold, "relative increase threshold over the window");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "QFI of a fixed strategy file");
  std::string ev_file;
  ModelFlags ev_model;
  double ev_phi = 0.0;
  ev->add_option("strategy", ev_file, "strategy or kraus-strategy container")->required()->check(CLI::ExistingFile);
  ev_model.add(ev);
  ev->add_option("--phi", ev_phi, "phase at which the QFI is evaluated");

  // bound
  auto* bd = app.add_subcommand("bound", "closed-form reference values");
  std::string bd_formula;
  double bd_p = 0.5;
  std::size_t bd_N = 1;
  bd->add_option("formula", bd_formula, "perp-dephasing-n2, parallel-dephasing or perp-damping")
      ->required()
      ->check(CLI::IsMember({"perp-dephasing-n2", "parallel-dephasing", "perp-damping"}));
  bd->add_option("--p", bd_p, "noise parameter")->required();
  bd->add_option("--N", bd_N, "number of channel uses");

  // comb
  auto* cb = app.add_subcommand("comb", "optimize the full comb directly (small N)");
  ModelFlags cb_model;
  std::size_t cb_N = 2, cb_dA = 4;
  std::uint64_t cb_seed = 1;
  std::string cb_out;
  cb_model.add(cb);
  cb->add_option("--N", cb_N, "number of channel uses");
  cb->add_option("--dA", cb_dA, "dimension of the final ancilla");
  cb->add_option("--seed", cb_seed, "seed of the random initial comb");
  cb->add_option("--out", cb_out, "write the optimal comb here");

  // decompose
  auto* dc = app.add_subcommand("decompose", "split a comb into a sequence of isometries");
  std::string dc_file, dc_out;
  double dc_cutoff = 1e-9;
  dc->add_option("input", dc_file, "comb, strategy or kraus-strategy container")->required()->check(CLI::ExistingFile);
  dc->add_option("--out", dc_out, "write the isometries here");
  dc->add_option("--cutoff", dc_cutoff, "relative eigenvalue cutoff for ranks");

  // split
  auto* sp = app.add_subcommand("split", "recompute split columns of a results CSV");
  std::string sp_in, sp_out;
  sp->add_option("csv", sp_in, "results CSV")->required()->check(CLI::ExistingFile);
  sp->add_option("--out", sp_out, "output path (default: in place)");

  // plot
  auto* pl = app.add_subcommand("plot", "SVG of F/N against N from a results CSV");
  std::string pl_in, pl_out, pl_title;
  bool pl_nobound = false, pl_nosplit = false;
  pl->add_option("csv", pl_in, "results CSV")->required()->check(CLI::ExistingFile);
  pl->add_option("--out", pl_out, "SVG path")->required();
  pl->add_option("--title", pl_title, "plot title");
  pl->add_flag("--no-bound", pl_nobound, "omit the analytic bound");
  pl->add_flag("--no-split", pl_nosplit, "omit the split series");

  // fixtures
  auto* fx = app.add_subcommand("fixtures", "write the built-in protocol fixtures as containers");
  std::string fx_dir = "data/fixtures";
  fx->add_option("--dir", fx_dir, "output directory");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*opt) {
      bench::ExperimentConfig cfg;
      if (!cfg_path.empty()) {
        cfg = bench::load_config(cfg_path);
      } else {
        cfg.model = opt_model.spec();
        cfg.N = opt_N;
        cfg.d_A = opt_dA;
        if (!opt_seeds.empty()) cfg.seeds = opt_seeds;
      }
      if (!csv_override.empty()) cfg.csv = csv_override;
      if (!plot_override.empty()) cfg.plot = plot_override;
      if (opt_workers) cfg.workers = opt_workers;
      if (opt_restarts >= 0) cfg.iss.restarts = opt_restarts;
      if (opt_threshold > 0) cfg.iss.threshold = opt_threshold;
      cfg.validate();
      const auto rows = bench::run_experiment(cfg, [](const bench::ResultRow& r) {
        spdlog::info("N={} d_A={} seed={} qfi={:.6f} sweeps={} {:.0f} ms {}", r.N, r.d_A, r.seed, r.qfi, r.iterations, r.wall_ms, r.status);
      });
      bool all = true;
      for (const auto& r : rows) all = all && r.converged;
      std::printf("%zu rows written to %s\n", rows.size(), cfg.csv.string().c_str());
      return all ? 0 : 2;
    }
    if (*ev) {
      const Strategy s = load_any_strategy(ev_file);
      const auto chk = validate_strategy(s, 1e-6);
      if (!chk.ok) spdlog::warn("strategy constraints violated by {:.3e}", chk.max_constraint_residual);
      std::printf("%.10f\n", strategy_qfi(s, ev_model.spec(), ev_phi));
      return 0;
    }
    if (*bd) {
      double v = 0;
      if (bd_formula == "perp-dephasing-n2") v = perp_dephasing_qfi2(bd_p);
      else if (bd_formula == "parallel-dephasing") v = parallel_dephasing_bound(bd_N, bd_p);
      else v = perp_damping_optimal(bd_N, bd_p).fi;
      std::printf("%.10f\n", v);
      return 0;
    }
    if (*cb) {
      FullCombConfig fc;
      fc.d_out_ancilla = cb_dA;
      fc.seed = cb_seed;
      const auto res = iss_full_comb(channel_comb(cb_model.spec(), cb_N), 2, fc);
      std::printf("qfi %.10f iterations %d %s\n", res.qfi, res.iterations, res.status.c_str());
      if (!cb_out.empty()) container::write_file(cb_out, container::to_json(res.comb));
      return res.converged ? 0 : 2;
    }
    if (*dc) {
      const auto j = container::read_file(dc_file);
      const Comb c = container::kind_of(j) == "comb" ? container::comb_from_json(j) : link_strategy(load_any_strategy(dc_file));
      const auto report = validate_comb(c);
      std::printf("comb N=%zu max chain residual %.3e min eigenvalue %.3e %s\n", c.N, report.max_residual, report.min_eigenvalue,
                  report.ok ? "valid" : "INVALID");
      const auto seq = decompose_to_isometries(c, dc_cutoff);
      for (std::size_t k = 0; k < seq.V.size(); ++k)
        std::printf("V%zu %ldx%ld ancilla %zu\n", k + 1, static_cast<long>(seq.V[k].rows()), static_cast<long>(seq.V[k].cols()),
                    seq.ancilla_dims[k]);
      const double recon = (reconstruct(seq).matrix() - c.matrix()).norm();
      std::printf("isometry defect %.3e least-squares residual %.3e reconstruction %.3e%s\n", max_isometry_defect(seq),
                  seq.residual, recon, seq.rank_ambiguous ? " (rank ambiguous)" : "");
      if (!dc_out.empty()) container::write_file(dc_out, container::to_json(seq));
      return report.ok ? 0 : 2;
    }
    if (*sp) {
      auto rows = bench::read_csv(sp_in);
      bench::apply_split(rows);
      bench::write_csv(sp_out.empty() ? sp_in : sp_out, rows);
      return 0;
    }
    if (*pl) {
      bench::PlotStyle style;
      style.title = pl_title;
      style.bound = !pl_nobound;
      style.split = !pl_nosplit;
      std::ofstream out(pl_out);
      out << bench::emit_plot(bench::read_csv(pl_in), style);
      return out ? 0 : 1;
    }
    if (*fx) {
      fs::create_directories(fx_dir);
      container::write_file(fs::path(fx_dir) / "damping_p0.5_one_qubit.json", container::to_json(damping_fixture_one_qubit()));
      container::write_file(fs::path(fx_dir) / "damping_p0.5_two_qubit.json", container::to_json(damping_fixture_two_qubit()));
      container::write_file(fs::path(fx_dir) / "perp_dephasing_n3_p0.9.json", container::to_json(perp_dephasing_n3(0.9)));
      std::printf("fixtures written to %s\n", fx_dir.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
