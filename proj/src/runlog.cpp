#include "ggn/runlog.hpp"

#include "ggn/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>

namespace ggn {

namespace {

template <class T>
std::string opt(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_same_v<T, bool>) {
    return *v ? "1" : "0";
  } else if constexpr (std::is_same_v<T, double>) {
    return format_number(*v);
  } else {
    return std::to_string(*v);
  }
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_number(double x) { return fmt::format("{:.17g}", x); }

std::string runlog_header() {
  return "iter,elapsed_s,train_loss,test_loss,alpha,eta,step_norm,LD_bound,nnz,p1_frob,p1_block,"
         "g22_pos,g11_pd,p2_ok,accuracy";
}

std::string format_row(const IterationRecord& r, bool include_timing) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", r.iter,
                     include_timing ? format_number(r.elapsed_s) : std::string(),
                     opt(r.train_loss), opt(r.test_loss), opt(r.alpha), opt(r.eta),
                     opt(r.step_norm), opt(r.ld_bound), opt(r.nnz), opt(r.p1_frob),
                     opt(r.p1_block), opt(r.g22_pos), opt(r.g11_pd), opt(r.p2_ok),
                     opt(r.accuracy));
}

std::string runlog_csv(const RunLog& log, bool include_timing) {
  std::string out = fmt::format("#schema={}\n{}\n", kRunlogSchema, runlog_header());
  for (const auto& r : log.rows) {
    out += format_row(r, include_timing);
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

void write_runlog_csv(const std::filesystem::path& path, const RunLog& log) {
  write_text(path, runlog_csv(log));
}

std::string summary_csv(const std::vector<RunSummary>& summaries) {
  std::set<std::string> keys;
  for (const auto& s : summaries)
    for (const auto& [k, v] : s.extra) keys.insert(k);
  std::string out = fmt::format("#schema={}\n", kSummarySchema);
  out += "label,method,seed,steps,final_train_loss,final_test_loss,final_accuracy,nnz,ti_plain,"
         "ti_include_zeros,ti_include_zeros_tol,optimizer_time_s,diagnostics_time_s,"
         "assumption_a_violated,error";
  for (const auto& k : keys) out += "," + k;
  out += '\n';
  for (const auto& s : summaries) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", quote(s.label), s.method,
                       s.seed, s.steps, format_number(s.final_train_loss), opt(s.final_test_loss),
                       opt(s.final_accuracy), s.nnz, opt(s.ti_plain), opt(s.ti_include_zeros),
                       opt(s.ti_include_zeros_tol), format_number(s.optimizer_time_s),
                       format_number(s.diagnostics_time_s), s.assumption_a_violated ? 1 : 0,
                       quote(s.error));
    for (const auto& k : keys) {
      const auto it = s.extra.find(k);
      out += ",";
      if (it != s.extra.end()) out += format_number(it->second);
    }
    out += '\n';
  }
  return out;
}

}  // namespace ggn
