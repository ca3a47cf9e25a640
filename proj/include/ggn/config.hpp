#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ggn {

struct DatasetSpec {
  std::string kind = "teacher-student";  // teacher-student | mnist | fashion-mnist | mnist-ts | uci
  std::string name;                      // UCI table name
  std::string dir;                       // overrides $DATA_DIR/<kind>
  int n0 = 20;
  int teacher_width = 5;
  std::string teacher_activation = "silu";
  long m_train = 200;
  long m_test = 1000;
  long train_limit = 0;  // first N training samples of an IDX set, 0 = all
  bool standardize = true;
};

struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  int points = 9;
  int full_points = 41;
  bool log_spacing = false;
};

/// Field-for-field mirror of the JSON config file.
struct ExperimentConfig {
  std::string name = "run";
  DatasetSpec dataset;
  int width = 100;
  std::string activation = "silu";
  double init_scale = 1.0;
  std::string method = "ggn-score";
  double tau = 1e-4;
  std::string mu_rule = "c_over_kappa";  // c_over_kappa | fixed
  double mu_c = 1.0;
  double mu = 1.0;  // used when mu_rule == fixed
  bool penalize_v_only = false;
  double unpenalized_damping = 1e-4;
  double abar = 0.95;
  double gd_lr = 1.0;
  bool gd_regularized = false;
  long batch_size = 0;
  long steps = 200;
  long epochs = 0;
  long gd_steps = 1000;  // compare-gd and the real-data comparisons
  std::vector<std::uint64_t> seeds{0};
  long diag_every = 1;  // 0 disables the theorem monitors
  long eval_every = 1;
  long ti_probe_limit = 0;
  GridSpec mu_grid{1e-3, 10.0, 9, 41, false};
  GridSpec tau_grid{1e-8, 1.0, 9, 41, false};
  bool full_grid = false;
  int workers = 1;
  std::string out_dir = "out";

  void validate() const;
};

ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Grid values: linear or logarithmic spacing over [min, max].
std::vector<double> make_grid(const GridSpec& g, bool full);

}  // namespace ggn
