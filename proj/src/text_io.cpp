#include "deepte/text_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace deepte {

using nlohmann::json;

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error(where + ": cannot parse number `" + s + "`");
  }
  return v;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  return p.replace_extension(".json");
}

void write_series(const DemandSeries& series, const std::filesystem::path& csv_path, double gamma) {
  const auto demands = all_demands(series.node_count);
  if (static_cast<int>(demands.size()) != series.demand_count()) {
    throw std::invalid_argument("series columns do not match its node count");
  }
  std::ofstream out = open_out(csv_path);
  for (std::size_t d = 0; d < demands.size(); ++d) {
    out << (d ? "," : "") << demands[d].src << '>' << demands[d].dst;
  }
  out << '\n';
  for (int s = 0; s < series.steps(); ++s) {
    for (int d = 0; d < series.demand_count(); ++d) out << (d ? "," : "") << format_number(series.values(s, d));
    out << '\n';
  }
  json meta = {{"tau", series.tau},
               {"node_count", series.node_count},
               {"steps", series.steps()},
               {"elephants", series.elephants},
               {"seed", series.seed},
               {"gamma", gamma}};
  std::ofstream side = open_out(sidecar_path(csv_path));
  side << meta.dump(2) << '\n';
}

DemandSeries read_series(const std::filesystem::path& csv_path) {
  std::ifstream side = open_in(sidecar_path(csv_path));
  const json meta = json::parse(side);
  DemandSeries series;
  series.tau = meta.at("tau").get<double>();
  series.node_count = meta.at("node_count").get<int>();
  series.elephants = meta.at("elephants").get<std::vector<int>>();
  series.seed = meta.at("seed").get<std::uint64_t>();
  const int steps = meta.at("steps").get<int>();

  std::ifstream in = open_in(csv_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(csv_path.string() + ": empty series file");
  const auto header = split(line, ',');
  const auto demands = all_demands(series.node_count);
  if (header.size() != demands.size()) throw std::runtime_error(csv_path.string() + ": header/node count mismatch");
  for (std::size_t d = 0; d < demands.size(); ++d) {
    if (header[d] != std::to_string(demands[d].src) + ">" + std::to_string(demands[d].dst)) {
      throw std::runtime_error(csv_path.string() + ": unexpected column `" + header[d] + "`");
    }
  }
  series.values.resize(steps, static_cast<Eigen::Index>(demands.size()));
  for (int s = 0; s < steps; ++s) {
    if (!std::getline(in, line)) throw std::runtime_error(csv_path.string() + ": truncated at step " + std::to_string(s));
    const auto fields = split(line, ',');
    if (fields.size() != demands.size()) {
      throw std::runtime_error(csv_path.string() + ": wrong field count on line " + std::to_string(s + 2));
    }
    for (std::size_t d = 0; d < fields.size(); ++d) {
      series.values(s, static_cast<Eigen::Index>(d)) = parse_double(fields[d], csv_path.string());
    }
  }
  for (int e : series.elephants) {
    if (e < 0 || e >= series.demand_count()) throw std::runtime_error("elephant index out of range");
  }
  return series;
}

void write_model(const PredictorModel& model, const std::filesystem::path& path) {
  std::vector<double> coeffs;
  for (int p = 0; p < model.past(); ++p) {
    for (int h = 0; h < model.horizon(); ++h) coeffs.push_back(model.X(p, h));
  }
  json j = {{"L", model.past()}, {"H", model.horizon()}, {"X", coeffs}};
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

PredictorModel read_model(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  const json j = json::parse(in);
  const int L = j.at("L").get<int>(), H = j.at("H").get<int>();
  const auto coeffs = j.at("X").get<std::vector<double>>();
  if (L < 1 || H < 1 || static_cast<int>(coeffs.size()) != L * H) throw std::runtime_error("malformed predictor model");
  PredictorModel model;
  model.X.resize(L, H);
  for (int p = 0; p < L; ++p) {
    for (int h = 0; h < H; ++h) model.X(p, h) = coeffs[p * H + h];
  }
  return model;
}

void write_steps_csv(const MetricsReport& report, std::ostream& out) {
  out << "step,time_s,method,delay,opt_delay,pr,rc,fallback,pe_rank\n";
  for (const StepRecord& s : report.steps) {
    out << s.step << ',' << format_number(s.time_s) << ',' << report.method << ',' << format_number(s.delay) << ','
        << format_number(s.opt_delay) << ',' << format_number(s.pr) << ',' << format_number(s.rc) << ','
        << (s.fallback ? 1 : 0) << ',' << s.pe_rank << '\n';
  }
}

MetricsReport read_steps_csv(std::istream& in, const std::string& series_name) {
  MetricsReport report;
  report.series = series_name;
  std::string line;
  if (!std::getline(in, line) || line != "step,time_s,method,delay,opt_delay,pr,rc,fallback,pe_rank") {
    throw std::runtime_error("not a per-step metrics file");
  }
  const std::string where = series_name.empty() ? "steps" : series_name;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 9) throw std::runtime_error(where + ": malformed row `" + line + "`");
    StepRecord s;
    s.step = std::stoi(f[0]);
    s.time_s = parse_double(f[1], where);
    report.method = f[2];
    s.delay = parse_double(f[3], where);
    s.opt_delay = parse_double(f[4], where);
    s.pr = parse_double(f[5], where);
    s.rc = parse_double(f[6], where);
    s.fallback = f[7] == "1";
    s.pe_rank = std::stoi(f[8]);
    // Only DeeP-TE decision steps carry an excitation rank.
    s.decision = s.pe_rank >= 0;
    if (s.decision) {
      ++report.decisions;
      if (s.fallback) ++report.fallbacks;
    }
    report.steps.push_back(s);
  }
  finalize_metrics(report);
  return report;
}

void write_summary_csv(const SummaryTable& table, std::ostream& out) {
  out << "series,method,mean_pr,mean_rc,median_pr,fallback_frac\n";
  for (const SummaryRow& r : table.rows) {
    out << r.series << ',' << r.method << ',' << format_number(r.mean_pr) << ',' << format_number(r.mean_rc) << ','
        << format_number(r.median_pr) << ',' << format_number(r.fallback_frac) << '\n';
  }
}

void write_quartiles_csv(const SummaryTable& table, std::ostream& out) {
  out << "method,series_count,pr_q1,pr_median,pr_q3,rc_min,rc_q1,rc_median,rc_q3,rc_max\n";
  for (const QuartileRow& q : table.quartiles) {
    out << q.method << ',' << q.series_count << ',' << format_number(q.pr_q1) << ',' << format_number(q.pr_median)
        << ',' << format_number(q.pr_q3) << ',' << format_number(q.rc_min) << ',' << format_number(q.rc_q1) << ','
        << format_number(q.rc_median) << ',' << format_number(q.rc_q3) << ',' << format_number(q.rc_max) << '\n';
  }
}

void write_paths_csv(const Topology& topo, const PathSet& paths, std::ostream& out) {
  out << "demand,src,dst,path,hops,nodes\n";
  for (int d = 0; d < paths.demand_count(); ++d) {
    for (int j = 0; j < paths.path_count(d); ++j) {
      const auto nodes = path_nodes(topo, paths.path(d, j));
      out << d << ',' << paths.demand(d).src << ',' << paths.demand(d).dst << ',' << j << ','
          << paths.path(d, j).size() << ',';
      for (std::size_t i = 0; i < nodes.size(); ++i) out << (i ? "-" : "") << nodes[i];
      out << '\n';
    }
  }
}

}  // namespace deepte
