#include "ggn/experiment.hpp"

#include "ggn/dynamics.hpp"
#include "ggn/error.hpp"

#include <fmt/format.h>

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace ggn {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::filesystem::path dataset_dir(const ExperimentConfig& cfg, const std::string& fallback) {
  if (!cfg.dataset.dir.empty()) return cfg.dataset.dir;
  return data_root() / fallback;
}

}  // namespace

PreparedData prepare_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  const DatasetSpec& d = cfg.dataset;
  PreparedData out;
  if (d.kind == "teacher-student") {
    const TeacherSpec teacher = make_teacher(d.teacher_width, d.n0,
                                             activation_from_string(d.teacher_activation),
                                             derive_seed(seed, 1));
    out.data = gen_teacher_student(teacher, d.m_train, d.m_test, derive_seed(seed, 2));
    out.teacher = teacher;
  } else if (d.kind == "mnist" || d.kind == "fashion-mnist") {
    out.data = load_mnist_dir(dataset_dir(cfg, d.kind), d.kind, d.train_limit);
  } else if (d.kind == "mnist-ts") {
    const Dataset mnist = load_mnist_dir(dataset_dir(cfg, "mnist"), "mnist");
    MnistTeacherOptions opts;
    opts.teacher_width = d.teacher_width;
    auto ts = mnist_teacher_student(mnist, derive_seed(seed, 1), opts);
    out.data = std::move(ts.data);
    out.teacher = std::move(ts.teacher);
  } else if (d.kind == "uci") {
    UciOptions opts;
    opts.standardize = d.standardize;
    out.data = load_uci_dir(dataset_dir(cfg, "uci"), d.name, opts);
  } else {
    throw ConfigError("unknown dataset kind '" + d.kind + "'");
  }
  return out;
}

NetworkConfig network_config(const ExperimentConfig& cfg, const Dataset& data) {
  return NetworkConfig::standard(static_cast<int>(data.input_dim()), cfg.width,
                                 activation_from_string(cfg.activation),
                                 static_cast<int>(data.output_dim()));
}

double resolve_mu(const ExperimentConfig& cfg) {
  if (cfg.mu_rule == "fixed") return cfg.mu;
  // c / kappa(n) with kappa = 1/sqrt(n)
  return cfg.mu_c * std::sqrt(static_cast<double>(cfg.width));
}

GscRegularizer make_regularizer(const ExperimentConfig& cfg, const NetworkConfig& net) {
  GscRegularizer reg(cfg.tau, resolve_mu(cfg), net.param_count());
  if (cfg.penalize_v_only) {
    reg.restrict_to_tail(static_cast<Eigen::Index>(net.n) * net.outputs, cfg.unpenalized_damping);
  }
  return reg;
}

RunLog run_one(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed) {
  RunLog log;
  const Method method = method_from_string(cfg.method);
  try {
    const NetworkConfig net = network_config(cfg, data);
    NetworkParams params = NetworkParams::gaussian(net, derive_seed(seed, 3), cfg.init_scale);
    std::optional<GscRegularizer> reg;
    if (method == Method::GgnScore || cfg.gd_regularized) reg = make_regularizer(cfg, net);

    TrainOptions opts;
    opts.method = method;
    opts.abar = cfg.abar;
    opts.gd_lr = cfg.gd_lr;
    opts.gd_regularized = cfg.gd_regularized;
    opts.schedule.batch_size = cfg.batch_size;
    opts.schedule.steps = cfg.steps;
    opts.schedule.epochs = cfg.epochs;
    opts.seed = derive_seed(seed, 4);
    opts.eval_every = cfg.eval_every;
    opts.ti_probe_limit = cfg.ti_probe_limit;

    TheoremMonitor monitor(cfg.diag_every);
    std::vector<StepObserver*> observers;
    if (cfg.diag_every > 0 && method == Method::GgnScore) observers.push_back(&monitor);

    log = train(net, params, data, reg ? &*reg : nullptr, opts, observers);
    for (const auto& [k, v] : monitor.counters()) log.summary.extra["mon_" + k] = v;
    if (!observers.empty()) log.summary.extra["mon_max_step_to_ld"] = monitor.max_step_to_bound_ratio();
    if (reg) {
      log.summary.extra["m_step"] = reg->m_step();
    }
  } catch (const Error& e) {
    log.summary.method = to_string(method);
    log.summary.seed = seed;
    log.summary.error = e.what();
  }
  log.summary.label = cfg.name;
  log.summary.seed = seed;
  log.summary.extra["tau"] = cfg.tau;
  log.summary.extra["mu"] = resolve_mu(cfg);
  log.summary.extra["width"] = cfg.width;
  return log;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(std::max(workers, 1), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

void write_output(const ExperimentConfig& cfg, const std::string& file, const std::string& text) {
  write_text(std::filesystem::path(cfg.out_dir) / cfg.name / file, text);
}

std::vector<RunLog> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<RunLog> logs(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), cfg.workers, [&](std::size_t i) {
    const PreparedData prepared = prepare_dataset(cfg, cfg.seeds[i]);
    logs[i] = run_one(cfg, prepared.data, cfg.seeds[i]);
  });
  std::vector<RunSummary> summaries;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    write_output(cfg, fmt::format("runlog_seed{}.csv", cfg.seeds[i]), runlog_csv(logs[i]));
    summaries.push_back(logs[i].summary);
  }
  write_output(cfg, "summary.csv", summary_csv(summaries));
  write_output(cfg, "config.json", config_to_json_text(cfg));
  return logs;
}

SweepResult sweep(const ExperimentConfig& cfg, const std::string& parameter) {
  cfg.validate();
  if (parameter != "mu" && parameter != "tau") throw ConfigError("sweep parameter must be mu or tau");
  const GridSpec& grid = parameter == "mu" ? cfg.mu_grid : cfg.tau_grid;
  const std::vector<double> values = make_grid(grid, cfg.full_grid);
  const std::size_t seeds = cfg.seeds.size();

  SweepResult result;
  result.parameter = parameter;
  result.runs.resize(values.size() * seeds);
  std::vector<PreparedData> data(seeds);
  parallel_for(seeds, cfg.workers, [&](std::size_t s) { data[s] = prepare_dataset(cfg, cfg.seeds[s]); });
  parallel_for(result.runs.size(), cfg.workers, [&](std::size_t k) {
    const std::size_t v = k / seeds;
    const std::size_t s = k % seeds;
    ExperimentConfig run_cfg = cfg;
    if (parameter == "mu") {
      run_cfg.mu_rule = "fixed";
      run_cfg.mu = values[v];
    } else {
      run_cfg.tau = values[v];
    }
    run_cfg.name = fmt::format("{}={}", parameter, format_number(values[v]));
    result.runs[k] = run_one(run_cfg, data[s].data, cfg.seeds[s]).summary;
  });

  std::size_t recommended = 0;
  if (parameter == "mu") {
    const double target = std::sqrt(static_cast<double>(cfg.width));
    for (std::size_t v = 1; v < values.size(); ++v) {
      if (std::abs(values[v] - target) < std::abs(values[recommended] - target)) recommended = v;
    }
  }
  for (std::size_t v = 0; v < values.size(); ++v) {
    SweepRow row;
    row.value = values[v];
    row.recommended = parameter == "mu" && v == recommended;
    for (std::size_t s = 0; s < seeds; ++s) {
      const RunSummary& r = result.runs[v * seeds + s];
      if (!r.error.empty()) {
        ++row.failures;
        continue;
      }
      ++row.seeds;
      row.mean_train_loss += r.final_train_loss;
      row.mean_test_loss += r.final_test_loss.value_or(std::nan(""));
      row.mean_nnz += static_cast<double>(r.nnz);
    }
    if (row.seeds > 0) {
      row.mean_train_loss /= row.seeds;
      row.mean_test_loss /= row.seeds;
      row.mean_nnz /= row.seeds;
    } else {
      row.mean_train_loss = row.mean_test_loss = row.mean_nnz = std::nan("");
    }
    result.rows.push_back(row);
  }
  write_output(cfg, "sweep_runs.csv", summary_csv(result.runs));
  write_output(cfg, "sweep_summary.csv", sweep_summary_csv(result));
  write_output(cfg, "config.json", config_to_json_text(cfg));
  return result;
}

std::string sweep_summary_csv(const SweepResult& r) {
  std::string out = fmt::format("#schema={}\n", kSummarySchema);
  out += "param,value,seeds,failures,mean_train_loss,mean_test_loss,mean_nnz,recommended\n";
  for (const auto& row : r.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.parameter, format_number(row.value), row.seeds,
                       row.failures, format_number(row.mean_train_loss),
                       format_number(row.mean_test_loss), format_number(row.mean_nnz),
                       row.recommended ? 1 : 0);
  }
  return out;
}

std::string merged_csv(const Comparison& c, bool include_timing) {
  std::string out = fmt::format("#schema={}\nmethod,{}\n", kRunlogSchema, runlog_header());
  for (const RunLog* log : {&c.ggn, &c.gd}) {
    for (const auto& row : log->rows) {
      out += log->summary.method + "," + format_row(row, include_timing) + "\n";
    }
  }
  return out;
}

std::vector<Comparison> compare_methods(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<Comparison> out(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), cfg.workers, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    const PreparedData prepared = prepare_dataset(cfg, seed);
    ExperimentConfig ggn_cfg = cfg;
    ggn_cfg.method = "ggn-score";
    ExperimentConfig gd_cfg = cfg;
    gd_cfg.method = "gd";
    if (cfg.gd_steps > 0) {
      gd_cfg.steps = cfg.gd_steps;
      gd_cfg.epochs = 0;
    }
    Comparison& c = out[i];
    c.seed = seed;
    c.ggn = run_one(ggn_cfg, prepared.data, seed);
    c.gd = run_one(gd_cfg, prepared.data, seed);
    if (c.ggn.summary.error.empty() && c.gd.summary.error.empty()) {
      const double target = c.gd.summary.final_train_loss;
      for (const auto& row : c.ggn.rows) {
        if (row.train_loss && *row.train_loss <= target) {
          c.ggn_iters_to_gd_final = row.iter;
          break;
        }
      }
    }
  });
  std::vector<RunSummary> summaries;
  for (const auto& c : out) {
    write_output(cfg, fmt::format("runlog_ggn_seed{}.csv", c.seed), runlog_csv(c.ggn));
    write_output(cfg, fmt::format("runlog_gd_seed{}.csv", c.seed), runlog_csv(c.gd));
    write_output(cfg, fmt::format("compare_seed{}.csv", c.seed), merged_csv(c));
    RunSummary g = c.ggn.summary;
    if (c.ggn_iters_to_gd_final) g.extra["iters_to_gd_final"] = static_cast<double>(*c.ggn_iters_to_gd_final);
    summaries.push_back(g);
    summaries.push_back(c.gd.summary);
  }
  write_output(cfg, "summary.csv", summary_csv(summaries));
  write_output(cfg, "config.json", config_to_json_text(cfg));
  return out;
}

}  // namespace ggn
