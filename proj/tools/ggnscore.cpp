// Experiment driver: run, sweeps, GD comparison and real-data runs.

#include "ggn/config.hpp"
#include "ggn/error.hpp"
#include "ggn/experiment.hpp"
#include "ggn/kernels.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <optional>

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool full_grid = false;
  std::optional<long> diag_every;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--seed", f.seed, "run a single seed instead of the configured list");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  cmd->add_flag("--full-grid", f.full_grid, "use the 41-point grids (hours of CPU time)");
  cmd->add_option("--diag-every", f.diag_every, "theorem monitor cadence, 0 disables");
  cmd->add_option("--threads", f.threads, "OpenMP threads for the kernels");
}

// Defaults per subcommand; a config file replaces them entirely.
ggn::ExperimentConfig defaults_for(const std::string& cmd) {
  ggn::ExperimentConfig c;
  c.name = cmd;
  if (cmd == "sweep-mu" || cmd == "sweep-tau") {
    c.dataset.m_train = 500;
    c.dataset.m_test = 1000;
    c.width = 100;
    c.steps = 100;
    c.diag_every = 0;
    c.seeds = {0, 1, 2};
    // mu = sqrt(n) for the tau sweep: mu = 1/sqrt(n) diverges from a unit Gaussian init.
    if (cmd == "sweep-tau") c.tau_grid.log_spacing = true;
  } else if (cmd == "compare-gd") {
    c.dataset.m_train = 200;
    c.dataset.m_test = 1000;
    c.steps = 500;
    c.gd_steps = 1000;
    c.diag_every = 0;
  } else if (cmd == "mnist" || cmd == "mnist-ts" || cmd == "uci") {
    c.dataset.kind = cmd == "uci" ? "uci" : cmd;
    c.dataset.name = cmd == "uci" ? "pendigits" : "";
    c.dataset.train_limit = cmd == "mnist" ? 5000 : 0;
    c.dataset.teacher_width = 16;
    c.width = cmd == "mnist" ? 512 : (cmd == "mnist-ts" ? 1024 : 128);
    c.activation = cmd == "mnist-ts" ? "silu" : "relu";
    c.batch_size = 16;
    c.steps = 0;
    c.epochs = 1;
    c.gd_steps = 0;
    c.seeds = {0, 1, 2};
    c.diag_every = 50;
    c.eval_every = 50;
  }
  return c;
}

ggn::ExperimentConfig resolve(const std::string& cmd, const CommonFlags& f) {
  ggn::ExperimentConfig c = f.config.empty() ? defaults_for(cmd) : ggn::load_config(f.config);
  if (f.seed) c.seeds = {*f.seed};
  if (!f.out_dir.empty()) c.out_dir = f.out_dir;
  if (f.full_grid) {
    c.full_grid = true;
    std::fprintf(stderr, "warning: full grids run 41 values per sweep; expect hours of CPU time\n");
  }
  if (f.diag_every) c.diag_every = *f.diag_every;
  if (f.threads > 0) ggn::kernels::set_threads(f.threads);
  c.validate();
  return c;
}

void report(const ggn::RunSummary& s) {
  fmt::print("{} seed={} method={} train={} test={}{} time={:.3f}s{}\n", s.label, s.seed, s.method,
             ggn::format_number(s.final_train_loss),
             s.final_test_loss ? ggn::format_number(*s.final_test_loss) : "n/a",
             s.final_accuracy ? fmt::format(" acc={:.4f}", *s.final_accuracy) : "",
             s.optimizer_time_s, s.error.empty() ? "" : " error=" + s.error);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GGN-SCORE experiments for two-layer networks"};
  app.require_subcommand(1);
  const std::vector<std::pair<std::string, std::string>> commands{
      {"run", "train with the configured method"},
      {"sweep-mu", "sweep the smoothing parameter mu"},
      {"sweep-tau", "sweep the regularization strength tau"},
      {"compare-gd", "GGN-SCORE against gradient descent on teacher-student data"},
      {"mnist", "GGN-SCORE and GD on an MNIST subset"},
      {"mnist-ts", "MNIST teacher-student comparison"},
      {"uci", "GGN-SCORE and GD on a UCI table"},
      {"print-config", "print the default config of a subcommand"}};
  CommonFlags flags;
  std::string print_target = "run";
  for (const auto& [name, help] : commands) {
    auto* cmd = app.add_subcommand(name, help);
    if (name == "print-config") {
      cmd->add_option("target", print_target, "subcommand whose defaults to print");
    } else {
      add_common(cmd, flags);
    }
  }
  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    if (cmd == "print-config") {
      fmt::print("{}", ggn::config_to_json_text(defaults_for(print_target)));
      return 0;
    }
    const ggn::ExperimentConfig cfg = resolve(cmd, flags);
    int failures = 0;
    if (cmd == "run") {
      for (const auto& log : ggn::run_experiment(cfg)) {
        report(log.summary);
        failures += !log.summary.error.empty();
      }
    } else if (cmd == "sweep-mu" || cmd == "sweep-tau") {
      const auto result = ggn::sweep(cfg, cmd == "sweep-mu" ? "mu" : "tau");
      fmt::print("{}", ggn::sweep_summary_csv(result));
      for (const auto& row : result.rows) failures += row.failures;
    } else {
      for (const auto& c : ggn::compare_methods(cfg)) {
        report(c.ggn.summary);
        report(c.gd.summary);
        if (c.ggn_iters_to_gd_final) {
          fmt::print("seed={} ggn-score reaches the final gd train loss at iteration {}\n", c.seed,
                     *c.ggn_iters_to_gd_final);
        }
        failures += !c.ggn.summary.error.empty() + !c.gd.summary.error.empty();
      }
    }
    fmt::print("outputs in {}/{}\n", cfg.out_dir, cfg.name);
    return failures == 0 ? 0 : 1;
  } catch (const ggn::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
