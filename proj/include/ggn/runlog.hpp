#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ggn {

inline constexpr const char* kRunlogSchema = "ggnscore-runlog/1";
inline constexpr const char* kSummarySchema = "ggnscore-summary/1";

/// One row per parameter state theta_t. Empty optionals are written as empty
/// CSV fields.
struct IterationRecord {
  long iter = 0;
  double elapsed_s = 0.0;  // cumulative optimizer time
  std::optional<double> train_loss;
  std::optional<double> test_loss;
  std::optional<double> alpha;
  std::optional<double> eta;
  std::optional<double> step_norm;
  std::optional<double> ld_bound;
  std::optional<long> nnz;  // coordinates with |theta_i| <= 1e-8
  std::optional<bool> p1_frob;
  std::optional<bool> p1_block;
  std::optional<bool> g22_pos;
  std::optional<bool> g11_pd;
  std::optional<bool> p2_ok;
  std::optional<double> accuracy;
};

struct RunSummary {
  std::string label;
  std::string method;
  unsigned long long seed = 0;
  long steps = 0;
  double final_train_loss = 0.0;
  std::optional<double> final_test_loss;
  std::optional<double> final_accuracy;
  long nnz = 0;
  std::optional<double> ti_plain;
  std::optional<double> ti_include_zeros;
  std::optional<double> ti_include_zeros_tol;
  double optimizer_time_s = 0.0;
  double diagnostics_time_s = 0.0;
  bool assumption_a_violated = false;  // non-smooth activation
  std::string error;                   // non-empty when the run failed
  std::map<std::string, double> extra;  // parameters and monitor counters
};

struct RunLog {
  std::vector<IterationRecord> rows;
  RunSummary summary;
};

std::string runlog_header();
std::string format_row(const IterationRecord& row, bool include_timing = true);

/// Schema comment, header, then one line per row.
std::string runlog_csv(const RunLog& log, bool include_timing = true);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_runlog_csv(const std::filesystem::path& path, const RunLog& log);

/// Header plus one line per summary; extra keys become columns in sorted
/// order over the union of all summaries.
std::string summary_csv(const std::vector<RunSummary>& summaries);

/// Shortest round-trip representation of a double.
std::string format_number(double x);

}  // namespace ggn
