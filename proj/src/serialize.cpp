#include "vrclip/serialize.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vrclip/errors.hpp"

namespace vrclip {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trace_to_csv(const std::vector<IterationRecord>& trace) {
  std::ostringstream out;
  out << kTraceHeader << "\n";
  for (const auto& r : trace) {
    out << r.k << ',' << format_double(r.F_x) << ',' << format_double(r.grad_norm)
        << ',' << format_double(r.v_norm) << ',' << format_double(r.eta) << ','
        << r.calls_paper << ',' << r.calls_eval << ',' << format_double(r.est_err_sq)
        << ',' << format_double(r.local_smoothness) << "\n";
  }
  return out.str();
}

std::vector<IterationRecord> trace_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw ParamError("trace: bad or missing header row");
  }
  std::vector<IterationRecord> trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    while (cells.size() < 9) cells.emplace_back();
    IterationRecord r;
    const auto num = [](const std::string& s) {
      return s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
    };
    r.k = std::stoll(cells[0]);
    r.F_x = num(cells[1]);
    r.grad_norm = num(cells[2]);
    r.v_norm = num(cells[3]);
    r.eta = num(cells[4]);
    r.calls_paper = std::stoll(cells[5]);
    r.calls_eval = std::stoll(cells[6]);
    r.est_err_sq = num(cells[7]);
    r.local_smoothness = num(cells[8]);
    if (!trace.empty() && r.k <= trace.back().k) {
      throw ParamError("trace: k must be strictly increasing");
    }
    trace.push_back(r);
  }
  return trace;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParamError("cannot write '" + path + "'");
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParamError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json opt_double(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

double double_or_nan(const json& j, const std::string& key) {
  if (!j.contains(key) || j.at(key).is_null()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.at(key).get<double>();
}

}  // namespace

json summary_to_json(const RunSummary& s) {
  json j;
  j["seed"] = s.seed;
  j["K"] = s.K;
  j["k_tilde"] = s.k_tilde;
  j["grad_norm_at_x_tilde"] = opt_double(s.grad_norm_at_x_tilde);
  if (s.first_hit) {
    j["first_hit"] = *s.first_hit;
    j["first_hit_calls_paper"] = s.first_hit_calls_paper;
    j["first_hit_calls_eval"] = s.first_hit_calls_eval;
  } else {
    j["first_hit"] = nullptr;
  }
  j["oracle_calls_total"] = s.oracle_calls_total;
  j["oracle_calls_eval"] = s.oracle_calls_eval;
  j["success"] = s.success;
  j["success_threshold"] = s.success_threshold;
  j["budget_bound"] = std::isfinite(s.budget_bound) ? json(s.budget_bound) : json(nullptr);
  j["F_final"] = opt_double(s.F_final);
  j["grad_norm_final"] = opt_double(s.grad_norm_final);
  j["k_best"] = s.k_best;
  j["grad_norm_best"] = opt_double(s.grad_norm_best);
  j["delta"] = s.delta;
  j["failed"] = s.failed;
  if (s.failed) j["failure"] = s.failure;
  return j;
}

RunSummary summary_from_json(const json& j) {
  RunSummary s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.K = j.at("K").get<std::int64_t>();
  s.k_tilde = j.at("k_tilde").get<std::int64_t>();
  s.grad_norm_at_x_tilde = double_or_nan(j, "grad_norm_at_x_tilde");
  if (j.contains("first_hit") && !j.at("first_hit").is_null()) {
    s.first_hit = j.at("first_hit").get<std::int64_t>();
    s.first_hit_calls_paper = j.at("first_hit_calls_paper").get<std::int64_t>();
    s.first_hit_calls_eval = j.at("first_hit_calls_eval").get<std::int64_t>();
  }
  s.oracle_calls_total = j.at("oracle_calls_total").get<std::int64_t>();
  s.oracle_calls_eval = j.at("oracle_calls_eval").get<std::int64_t>();
  s.success = j.at("success").get<bool>();
  s.success_threshold = j.at("success_threshold").get<double>();
  s.budget_bound = j.at("budget_bound").is_null()
                       ? std::numeric_limits<double>::infinity()
                       : j.at("budget_bound").get<double>();
  s.F_final = double_or_nan(j, "F_final");
  s.grad_norm_final = double_or_nan(j, "grad_norm_final");
  s.k_best = j.at("k_best").get<std::int64_t>();
  s.grad_norm_best = double_or_nan(j, "grad_norm_best");
  s.delta = j.at("delta").get<double>();
  s.failed = j.at("failed").get<bool>();
  if (s.failed) s.failure = j.value("failure", "");
  return s;
}

json scaling_to_json(const ScalingReport& r) {
  json pts = json::array();
  for (const auto& p : r.points) {
    json pj;
    pj["axis_value"] = p.axis_value;
    pj["median_calls"] = opt_double(p.median_calls);
    pj["hits"] = p.hits;
    pj["seeds"] = p.seeds;
    pj["censored"] = p.censored;
    pts.push_back(pj);
  }
  json j;
  j["axis"] = r.axis;
  j["points"] = pts;
  j["has_slope"] = r.has_slope;
  j["slope"] = opt_double(r.slope);
  j["slope_half_width"] = opt_double(r.slope_half_width);
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

json fit_to_json(const L0L1Fit& fit) {
  json j;
  j["L0_hat"] = fit.L0_hat;
  j["L1_hat"] = fit.L1_hat;
  j["r_squared"] = fit.r_squared;
  j["n_samples"] = fit.n_samples;
  j["max_violation"] = fit.max_violation;
  return j;
}

L0L1Fit fit_from_json(const json& j) {
  L0L1Fit fit;
  fit.L0_hat = j.at("L0_hat").get<double>();
  fit.L1_hat = j.at("L1_hat").get<double>();
  fit.r_squared = j.at("r_squared").get<double>();
  fit.n_samples = j.at("n_samples").get<int>();
  fit.max_violation = j.at("max_violation").get<double>();
  return fit;
}

std::string config_hash(const json& doc) {
  const std::string dump = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

}  // namespace vrclip
