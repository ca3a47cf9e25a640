#pragma once

#include "ggn/config.hpp"
#include "ggn/data.hpp"
#include "ggn/model.hpp"
#include "ggn/optimizer.hpp"
#include "ggn/regularizer.hpp"
#include "ggn/runlog.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ggn {

/// Independent stream `stream` of a run seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct PreparedData {
  Dataset data;
  std::optional<TeacherSpec> teacher;
};

/// Builds or loads the configured dataset. Real datasets come from
/// dataset.dir, else $DATA_DIR/<kind> (UCI: $DATA_DIR/uci).
PreparedData prepare_dataset(const ExperimentConfig& cfg, std::uint64_t seed);

NetworkConfig network_config(const ExperimentConfig& cfg, const Dataset& data);
double resolve_mu(const ExperimentConfig& cfg);
GscRegularizer make_regularizer(const ExperimentConfig& cfg, const NetworkConfig& net);

/// One training run on prepared data. Failures are recorded in
/// summary.error instead of thrown.
RunLog run_one(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed);

/// Calls fn(i) for i in [0, count) on `workers` threads.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

/// run: one log per seed; writes runlog_seed<s>.csv and summary.csv.
std::vector<RunLog> run_experiment(const ExperimentConfig& cfg);

struct SweepRow {
  double value = 0.0;
  int seeds = 0;
  int failures = 0;
  double mean_train_loss = 0.0;
  double mean_test_loss = 0.0;
  double mean_nnz = 0.0;
  bool recommended = false;
};

struct SweepResult {
  std::string parameter;  // "mu" or "tau"
  std::vector<SweepRow> rows;
  std::vector<RunSummary> runs;
};

/// Grid x seeds over mu or tau; writes sweep_runs.csv and sweep_summary.csv.
SweepResult sweep(const ExperimentConfig& cfg, const std::string& parameter);
std::string sweep_summary_csv(const SweepResult& r);

struct Comparison {
  std::uint64_t seed = 0;
  RunLog ggn;
  RunLog gd;
  /// First GGN-SCORE iteration whose train loss is <= GD's final train loss.
  std::optional<long> ggn_iters_to_gd_final;
};

/// GGN-SCORE and GD from identical data and initial weights. GD runs
/// gd_steps steps, or the GGN schedule when gd_steps == 0. Writes both logs
/// and a merged compare_seed<s>.csv.
std::vector<Comparison> compare_methods(const ExperimentConfig& cfg);
std::string merged_csv(const Comparison& c, bool include_timing = true);

/// Writes `text` to <out_dir>/<name>/<file>.
void write_output(const ExperimentConfig& cfg, const std::string& file, const std::string& text);

}  // namespace ggn
