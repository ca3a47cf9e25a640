#include "ggn/config.hpp"

#include "ggn/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ggn {

using nlohmann::json;

namespace {

json grid_to_json(const GridSpec& g) {
  return json{{"min", g.min},
              {"max", g.max},
              {"points", g.points},
              {"full_points", g.full_points},
              {"log_spacing", g.log_spacing}};
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }
}

GridSpec grid_from_json(const json& j, GridSpec g, const std::string& where) {
  reject_unknown(j, {"min", "max", "points", "full_points", "log_spacing"}, where);
  read(j, "min", g.min);
  read(j, "max", g.max);
  read(j, "points", g.points);
  read(j, "full_points", g.full_points);
  read(j, "log_spacing", g.log_spacing);
  return g;
}

}  // namespace

void ExperimentConfig::validate() const {
  static const std::set<std::string> kinds{"teacher-student", "mnist", "fashion-mnist", "mnist-ts",
                                           "uci"};
  if (!kinds.count(dataset.kind)) throw ConfigError("unknown dataset kind '" + dataset.kind + "'");
  if (dataset.kind == "uci" && dataset.name.empty()) throw ConfigError("uci dataset needs a name");
  if (dataset.n0 < 1 || dataset.teacher_width < 1) throw ConfigError("n0 and teacher_width must be >= 1");
  if (dataset.m_train < 1 || dataset.m_test < 0) throw ConfigError("invalid sample counts");
  if (width < 1) throw ConfigError("width must be >= 1");
  if (activation != "silu" && activation != "relu") throw ConfigError("activation must be silu or relu");
  if (method != "ggn-score" && method != "gd") throw ConfigError("method must be ggn-score or gd");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (mu_rule != "c_over_kappa" && mu_rule != "fixed") {
    throw ConfigError("mu_rule must be c_over_kappa or fixed");
  }
  if (!(mu_c > 0.0) || !(mu > 0.0)) throw ConfigError("mu and mu_c must be > 0");
  if (!(abar > 0.0) || abar > 1.0) throw ConfigError("abar must lie in (0, 1]");
  if (!(gd_lr > 0.0)) throw ConfigError("gd_lr must be > 0");
  if (batch_size < 0 || steps < 0 || epochs < 0 || gd_steps < 0) {
    throw ConfigError("batch_size, steps, epochs and gd_steps must be >= 0");
  }
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (diag_every < 0 || eval_every < 1) throw ConfigError("diag_every >= 0 and eval_every >= 1 required");
  for (const GridSpec* g : {&mu_grid, &tau_grid}) {
    if (g->points < 1 || g->full_points < 1 || !(g->max >= g->min)) throw ConfigError("invalid grid");
    if (g->log_spacing && !(g->min > 0.0)) throw ConfigError("log grid needs min > 0");
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

std::string config_to_json_text(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["dataset"] = json{{"kind", c.dataset.kind},
                      {"name", c.dataset.name},
                      {"dir", c.dataset.dir},
                      {"n0", c.dataset.n0},
                      {"teacher_width", c.dataset.teacher_width},
                      {"teacher_activation", c.dataset.teacher_activation},
                      {"m_train", c.dataset.m_train},
                      {"m_test", c.dataset.m_test},
                      {"train_limit", c.dataset.train_limit},
                      {"standardize", c.dataset.standardize}};
  j["width"] = c.width;
  j["activation"] = c.activation;
  j["init_scale"] = c.init_scale;
  j["method"] = c.method;
  j["tau"] = c.tau;
  j["mu_rule"] = c.mu_rule;
  j["mu_c"] = c.mu_c;
  j["mu"] = c.mu;
  j["penalize_v_only"] = c.penalize_v_only;
  j["unpenalized_damping"] = c.unpenalized_damping;
  j["abar"] = c.abar;
  j["gd_lr"] = c.gd_lr;
  j["gd_regularized"] = c.gd_regularized;
  j["batch_size"] = c.batch_size;
  j["steps"] = c.steps;
  j["epochs"] = c.epochs;
  j["gd_steps"] = c.gd_steps;
  j["seeds"] = c.seeds;
  j["diag_every"] = c.diag_every;
  j["eval_every"] = c.eval_every;
  j["ti_probe_limit"] = c.ti_probe_limit;
  j["mu_grid"] = grid_to_json(c.mu_grid);
  j["tau_grid"] = grid_to_json(c.tau_grid);
  j["full_grid"] = c.full_grid;
  j["workers"] = c.workers;
  j["out_dir"] = c.out_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"name", "dataset", "width", "activation", "init_scale", "method", "tau", "mu_rule",
                  "mu_c", "mu", "penalize_v_only", "unpenalized_damping", "abar", "gd_lr",
                  "gd_regularized", "batch_size", "steps", "epochs", "gd_steps", "seeds",
                  "diag_every", "eval_every", "ti_probe_limit", "mu_grid", "tau_grid", "full_grid",
                  "workers", "out_dir"},
                 "config");
  ExperimentConfig c;
  read(j, "name", c.name);
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    reject_unknown(d,
                   {"kind", "name", "dir", "n0", "teacher_width", "teacher_activation", "m_train",
                    "m_test", "train_limit", "standardize"},
                   "dataset");
    read(d, "kind", c.dataset.kind);
    read(d, "name", c.dataset.name);
    read(d, "dir", c.dataset.dir);
    read(d, "n0", c.dataset.n0);
    read(d, "teacher_width", c.dataset.teacher_width);
    read(d, "teacher_activation", c.dataset.teacher_activation);
    read(d, "m_train", c.dataset.m_train);
    read(d, "m_test", c.dataset.m_test);
    read(d, "train_limit", c.dataset.train_limit);
    read(d, "standardize", c.dataset.standardize);
  }
  read(j, "width", c.width);
  read(j, "activation", c.activation);
  read(j, "init_scale", c.init_scale);
  read(j, "method", c.method);
  read(j, "tau", c.tau);
  read(j, "mu_rule", c.mu_rule);
  read(j, "mu_c", c.mu_c);
  read(j, "mu", c.mu);
  read(j, "penalize_v_only", c.penalize_v_only);
  read(j, "unpenalized_damping", c.unpenalized_damping);
  read(j, "abar", c.abar);
  read(j, "gd_lr", c.gd_lr);
  read(j, "gd_regularized", c.gd_regularized);
  read(j, "batch_size", c.batch_size);
  read(j, "steps", c.steps);
  read(j, "epochs", c.epochs);
  read(j, "gd_steps", c.gd_steps);
  read(j, "seeds", c.seeds);
  read(j, "diag_every", c.diag_every);
  read(j, "eval_every", c.eval_every);
  read(j, "ti_probe_limit", c.ti_probe_limit);
  if (j.contains("mu_grid")) c.mu_grid = grid_from_json(j.at("mu_grid"), c.mu_grid, "mu_grid");
  if (j.contains("tau_grid")) c.tau_grid = grid_from_json(j.at("tau_grid"), c.tau_grid, "tau_grid");
  read(j, "full_grid", c.full_grid);
  read(j, "workers", c.workers);
  read(j, "out_dir", c.out_dir);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::vector<double> make_grid(const GridSpec& g, bool full) {
  const int n = full ? g.full_points : g.points;
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = g.min;
    return out;
  }
  for (int i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / (n - 1);
    if (g.log_spacing) {
      out[i] = std::pow(10.0, std::log10(g.min) + f * (std::log10(g.max) - std::log10(g.min)));
    } else {
      out[i] = g.min + f * (g.max - g.min);
    }
  }
  out.front() = g.min;
  out.back() = g.max;
  return out;
}

}  // namespace ggn
