#ifndef DEEPTE_TEXT_IO_HPP_
#define DEEPTE_TEXT_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "deepte/harness.hpp"
#include "deepte/predictor.hpp"
#include "deepte/traffic_gen.hpp"

namespace deepte {

// <stem>.csv holds one row per step with a `src>dst` header; <stem>.json
// holds tau, node count, elephants, seed and any extra metadata.
void write_series(const DemandSeries& series, const std::filesystem::path& csv_path, double gamma = 1.0);
DemandSeries read_series(const std::filesystem::path& csv_path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

void write_model(const PredictorModel& model, const std::filesystem::path& path);
PredictorModel read_model(const std::filesystem::path& path);

// step,time_s,method,delay,opt_delay,pr,rc,fallback,pe_rank
void write_steps_csv(const MetricsReport& report, std::ostream& out);
MetricsReport read_steps_csv(std::istream& in, const std::string& series_name);

// series,method,mean_pr,mean_rc,median_pr,fallback_frac
void write_summary_csv(const SummaryTable& table, std::ostream& out);
void write_quartiles_csv(const SummaryTable& table, std::ostream& out);

void write_paths_csv(const Topology& topo, const PathSet& paths, std::ostream& out);

// Shortest round-trip representation of a double.
std::string format_number(double value);

}  // namespace deepte

#endif  // DEEPTE_TEXT_IO_HPP_
