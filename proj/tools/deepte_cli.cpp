// deepte: traffic generation, simulation runs and summaries.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deepte/harness.hpp"
#include "deepte/net_core.hpp"
#include "deepte/text_io.hpp"
#include "deepte/traffic_gen.hpp"

namespace fs = std::filesystem;
using namespace deepte;

namespace {

struct RunFlags {
  std::string topo;
  std::vector<std::string> series;
  std::string out;
  std::uint64_t seed = 1;
  double alpha1 = 1000.0;
  double alpha2 = ControllerConfig{}.alpha2;
  double data_slack = ControllerConfig{}.data_slack;
  int horizon = 2;
  int past = 3;
  int n_phi = 2;
  int control_min = 30;
  int sample_min = 5;
  int k_paths = 4;
  int training_days = 2;
  int eval_days = 1;
};

void add_controller_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--topo", f.topo, "topology file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory")->required();
  cmd->add_option("--seed", f.seed, "perturbation seed");
  cmd->add_option("--alpha1", f.alpha1, "route-change penalty")->capture_default_str();
  cmd->add_option("--alpha2", f.alpha2, "data-fit regularizer weight")->capture_default_str();
  cmd->add_option("--data-slack", f.data_slack, "misfit weight on the data equations (0: exact)")
      ->capture_default_str();
  cmd->add_option("--horizon-h", f.horizon, "prediction horizon H")->capture_default_str();
  cmd->add_option("--past-l", f.past, "past intervals L")->capture_default_str();
  cmd->add_option("--n-phi", f.n_phi, "number of basis functions (0-2)")->capture_default_str();
  cmd->add_option("--control-min", f.control_min, "control interval, minutes")->capture_default_str();
  cmd->add_option("--sample-min", f.sample_min, "sample interval, minutes")->capture_default_str();
  cmd->add_option("--k-paths", f.k_paths, "candidate paths per demand")->capture_default_str();
  cmd->add_option("--training-days", f.training_days, "days used for fitting")->capture_default_str();
  cmd->add_option("--eval-days", f.eval_days, "evaluated days after training")->capture_default_str();
}

ExperimentConfig make_config(const RunFlags& f, Method method) {
  if (f.sample_min <= 0 || f.control_min % f.sample_min != 0) {
    throw std::invalid_argument("--control-min must be a positive multiple of --sample-min");
  }
  ExperimentConfig cfg;
  cfg.method = method;
  cfg.seed = f.seed;
  cfg.k_paths = f.k_paths;
  cfg.training_days = f.training_days;
  cfg.evaluation_days = f.eval_days;
  cfg.controller.alpha1 = f.alpha1;
  cfg.controller.alpha2 = f.alpha2;
  cfg.controller.data_slack = f.data_slack;
  cfg.controller.horizon = f.horizon;
  cfg.controller.past = f.past;
  cfg.controller.basis_count = f.n_phi;
  cfg.controller.samples = f.control_min / f.sample_min;
  return cfg;
}

std::string series_name(const fs::path& csv) {
  if (csv.stem() == "series" && csv.has_parent_path() && !csv.parent_path().filename().empty()) {
    return csv.parent_path().filename().string();
  }
  return csv.stem().string();
}

DemandSeries load_series_checked(const std::string& path, const RunFlags& f) {
  DemandSeries series = read_series(path);
  if (std::abs(series.tau - 60.0 * f.sample_min) > 1e-9) {
    throw std::invalid_argument(path + " was sampled every " + format_number(series.tau) +
                                " s, but --sample-min is " + std::to_string(f.sample_min));
  }
  return series;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const std::string& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

int gen_traffic(const std::string& topo_path, GenParams params, int sample_min, int k_paths, bool scale,
                int key_nodes, const std::string& out) {
  const Topology topo = load_topology(topo_path);
  params.tau = 60.0 * sample_min;
  params.key_nodes = key_nodes >= 0 ? key_nodes : default_key_nodes(fs::path(topo_path).stem().string());
  DemandSeries series;
  double gamma = 1.0;
  if (scale) {
    ScaleResult scaled = generate_scaled_series(topo, params, k_paths);
    gamma = scaled.gamma;
    series = std::move(scaled.series);
    std::cerr << "scaled by " << gamma << ": mean utilization " << scaled.mean_utilization << ", max "
              << scaled.max_utilization << '\n';
  } else {
    series = generate_series(topo, params);
  }
  write_series(series, fs::path(out) / "series.csv", gamma);
  return 0;
}

std::vector<MetricsReport> run_methods(const RunFlags& f, const std::vector<Method>& methods) {
  std::vector<MetricsReport> reports;
  for (const std::string& path : split_list(f.series)) {
    const ExperimentConfig base = make_config(f, methods.front());
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = prepare_scenario(load_topology(f.topo), load_series_checked(path, f), base);
    std::cerr << series_name(path) << ": oracle ready in "
              << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
    for (Method m : methods) {
      MetricsReport r = run_simulation(sc, make_config(f, m));
      r.series = series_name(path);
      std::cerr << r.series << " " << r.method << ": mean PR " << r.mean_pr << ", mean RC " << r.mean_rc
                << ", fallbacks " << r.fallbacks << "/" << r.decisions << ", " << r.wall_seconds << " s\n";
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

void write_reports(const std::vector<MetricsReport>& reports, const fs::path& out, bool prefix_series) {
  for (const MetricsReport& r : reports) {
    std::ostringstream os;
    write_steps_csv(r, os);
    const std::string name = (prefix_series ? r.series + "_" : "") + r.method + "_steps.csv";
    write_file(out / name, os.str());
  }
  const SummaryTable table = aggregate_metrics(reports);
  std::ostringstream summary, quartiles;
  write_summary_csv(table, summary);
  write_file(out / "summary.csv", summary.str());
  if (prefix_series) {
    write_quartiles_csv(table, quartiles);
    write_file(out / "quartiles.csv", quartiles.str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-enabled predictive traffic engineering lab"};
  app.require_subcommand(1);

  // gen-traffic
  GenParams gen;
  std::string gen_topo, gen_out;
  int gen_sample_min = 5, gen_k = 4, gen_key_nodes = -1;
  bool gen_no_scale = false;
  auto* g = app.add_subcommand("gen-traffic", "generate a scaled demand series");
  g->add_option("--topo", gen_topo, "topology file")->required()->check(CLI::ExistingFile);
  g->add_option("--out", gen_out, "output directory")->required();
  g->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  g->add_option("--days", gen.days, "series length in days")->capture_default_str();
  g->add_option("--sample-min", gen_sample_min, "sample interval, minutes")->capture_default_str();
  g->add_option("--elephants", gen.elephant_count, "foreground flows")->capture_default_str();
  g->add_option("--background-share", gen.background_share, "background volume share")->capture_default_str();
  g->add_option("--noise", gen.noise_level, "relative noise std")->capture_default_str();
  g->add_option("--amplitude", gen.amplitude, "diurnal amplitude")->capture_default_str();
  g->add_option("--target-util", gen.utilization_target, "mean link utilization target")->capture_default_str();
  g->add_option("--key-nodes", gen_key_nodes,
                "foreground endpoints among this many high-degree nodes (0: any pair >= 2 hops; default 6 on geant, else 7)");
  g->add_option("--k-paths", gen_k, "candidate paths used while scaling")->capture_default_str();
  g->add_flag("--no-scale", gen_no_scale, "skip utilization scaling");

  // paths
  std::string paths_topo, paths_out;
  int paths_k = 4;
  auto* p = app.add_subcommand("paths", "list candidate paths");
  p->add_option("--topo", paths_topo, "topology file")->required()->check(CLI::ExistingFile);
  p->add_option("--out", paths_out, "output directory")->required();
  p->add_option("--k", paths_k, "paths per demand")->capture_default_str();

  // run
  RunFlags run_flags;
  std::string run_method = "deepte";
  auto* r = app.add_subcommand("run", "simulate one method on one series");
  add_controller_flags(r, run_flags);
  r->add_option("--series", run_flags.series, "series csv")->required();
  r->add_option("--method", run_method, "deepte, opt, const, tg5 or tg30")->capture_default_str();

  // compare
  RunFlags cmp_flags;
  std::vector<std::string> cmp_methods{"deepte,const,tg5,tg30,opt"};
  auto* c = app.add_subcommand("compare", "simulate several methods on one or more series");
  add_controller_flags(c, cmp_flags);
  c->add_option("--series", cmp_flags.series, "series csv files (repeat or comma-separate)")->required();
  c->add_option("--methods", cmp_methods, "comma-separated methods")->capture_default_str();

  // report
  std::vector<std::string> report_runs;
  std::string report_out;
  int report_control_min = 30;
  auto* rep = app.add_subcommand("report", "summarize per-step csv files");
  rep->add_option("--runs", report_runs, "per-step csv files")->required();
  rep->add_option("--out", report_out, "output directory")->required();
  rep->add_option("--control-min", report_control_min, "control interval for the boundary-only RC")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) {
      return gen_traffic(gen_topo, gen, gen_sample_min, gen_k, !gen_no_scale, gen_key_nodes, gen_out);
    }
    if (*p) {
      const Topology topo = load_topology(paths_topo);
      std::ostringstream os;
      write_paths_csv(topo, PathSet::build(topo, paths_k), os);
      write_file(fs::path(paths_out) / "paths.csv", os.str());
      return 0;
    }
    if (*r) {
      const auto reports = run_methods(run_flags, {parse_method(run_method)});
      write_reports(reports, run_flags.out, false);
      return 0;
    }
    if (*c) {
      std::vector<Method> methods;
      for (const std::string& m : split_list(cmp_methods)) methods.push_back(parse_method(m));
      if (methods.empty()) throw std::invalid_argument("--methods is empty");
      write_reports(run_methods(cmp_flags, methods), cmp_flags.out, true);
      return 0;
    }
    if (*rep) {
      std::ostringstream os;
      if (report_control_min <= 0) throw std::invalid_argument("--control-min must be positive");
      os << "file,method,steps,mean_pr,median_pr,mean_rc,boundary_rc,decisions,fallback_frac\n";
      for (const std::string& path : report_runs) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read " + path);
        const MetricsReport m = read_steps_csv(in, fs::path(path).stem().string());
        // RC restricted to control-interval boundaries, where decisions land.
        double boundary_rc = 0.0;
        int boundaries = 0;
        for (const StepRecord& s : m.steps) {
          if (std::fmod(s.time_s, 60.0 * report_control_min) == 0.0) {
            boundary_rc += s.rc;
            ++boundaries;
          }
        }
        if (boundaries > 0) boundary_rc /= boundaries;
        os << fs::path(path).filename().string() << ',' << m.method << ',' << m.steps.size() << ','
           << format_number(m.mean_pr) << ',' << format_number(m.median_pr) << ',' << format_number(m.mean_rc)
           << ',' << format_number(boundary_rc) << ',' << m.decisions << ',' << format_number(m.fallback_fraction())
           << '\n';
      }
      write_file(fs::path(report_out) / "report.csv", os.str());
      std::cout << os.str();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "deepte: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
