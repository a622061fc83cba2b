#include "vrclip/config.hpp"

#include <fstream>
#include <set>

#include "vrclip/errors.hpp"

namespace vrclip {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& path,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) {
    throw ParamError("config: '" + path + "' must be an object");
  }
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ParamError("config: unknown key '" + path + "." + item.key() + "'");
    }
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParamError("config: bad value for '" + key + "': " + e.what());
  }
}

void parse_problem(const json& obj, ProblemSpec& spec) {
  require_keys(obj, "problem",
               {"name", "seed", "n", "d", "condition", "margin", "d_in",
                "d_hidden", "classes", "constants"});
  spec.name = get_or<std::string>(obj, "name", spec.name);
  spec.seed = get_or<std::uint64_t>(obj, "seed", spec.seed);
  spec.n = get_or<int>(obj, "n", spec.n);
  spec.d = get_or<int>(obj, "d", spec.d);
  spec.condition = get_or<double>(obj, "condition", spec.condition);
  spec.margin = get_or<double>(obj, "margin", spec.margin);
  spec.d_in = get_or<int>(obj, "d_in", spec.d_in);
  spec.d_hidden = get_or<int>(obj, "d_hidden", spec.d_hidden);
  spec.classes = get_or<int>(obj, "classes", spec.classes);
  if (obj.contains("constants")) {
    const json& c = obj.at("constants");
    require_keys(c, "problem.constants", {"L0", "L1", "sigma", "f_star", "certified"});
    if (c.contains("L0")) spec.L0 = c.at("L0").get<double>();
    if (c.contains("L1")) spec.L1 = c.at("L1").get<double>();
    if (c.contains("sigma")) spec.sigma = c.at("sigma").get<double>();
    if (c.contains("f_star")) spec.f_star = c.at("f_star").get<double>();
    if (c.contains("certified")) spec.certified = c.at("certified").get<bool>();
  }
}

}  // namespace

CliConfig parse_config(const json& doc) {
  require_keys(doc, "<root>",
               {"problem", "algorithm", "params", "run", "sweep", "audit", "output"});
  if (!doc.contains("problem") || !doc.contains("algorithm") ||
      !doc.contains("params")) {
    throw ParamError("config: sections 'problem', 'algorithm', 'params' are required");
  }

  CliConfig cfg;
  cfg.echo = doc;
  parse_problem(doc.at("problem"), cfg.run.problem);

  {
    const json& a = doc.at("algorithm");
    require_keys(a, "algorithm", {"kind", "setting"});
    cfg.run.kind = kind_from_string(get_or<std::string>(a, "kind", "l0l1_spider"));
    cfg.run.setting =
        setting_from_string(get_or<std::string>(a, "setting", "finite_sum"));
  }

  {
    const json& p = doc.at("params");
    require_keys(p, "params",
                 {"source", "epsilon", "rule", "S", "S1", "S2", "q", "K", "eta0",
                  "c1", "c2", "K_cap"});
    const auto source = get_or<std::string>(p, "source", "theorem");
    if (source == "theorem") {
      cfg.run.source = ParamsSource::theorem;
    } else if (source == "explicit") {
      cfg.run.source = ParamsSource::explicit_params;
    } else {
      throw ParamError("config: params.source must be 'theorem' or 'explicit'");
    }
    cfg.run.epsilon = get_or<double>(p, "epsilon", cfg.run.epsilon);
    cfg.run.rule = get_or<std::string>(p, "rule", cfg.run.rule);
    cfg.run.S = get_or<std::int64_t>(p, "S", cfg.run.S);
    cfg.run.S1 = get_or<std::int64_t>(p, "S1", cfg.run.S1);
    cfg.run.S2 = get_or<std::int64_t>(p, "S2", cfg.run.S2);
    cfg.run.q = get_or<std::int64_t>(p, "q", cfg.run.q);
    cfg.run.K = get_or<std::int64_t>(p, "K", cfg.run.K);
    cfg.run.eta0 = get_or<double>(p, "eta0", cfg.run.eta0);
    cfg.run.c1 = get_or<double>(p, "c1", cfg.run.c1);
    cfg.run.c2 = get_or<double>(p, "c2", cfg.run.c2);
    if (p.contains("K_cap")) cfg.run.K_cap = p.at("K_cap").get<std::int64_t>();
  }

  if (doc.contains("run")) {
    const json& r = doc.at("run");
    require_keys(r, "run",
                 {"seeds", "diagnostics", "stride", "x0_radius", "x0_grad_target",
                  "threshold", "stop_at_first_hit"});
    cfg.run.seeds = get_or<std::vector<std::uint64_t>>(r, "seeds", cfg.run.seeds);
    if (cfg.run.seeds.empty()) throw ParamError("config: run.seeds must not be empty");
    cfg.run.diagnostics =
        diagnostics_from_string(get_or<std::string>(r, "diagnostics", "light"));
    cfg.run.stride = get_or<std::int64_t>(r, "stride", cfg.run.stride);
    if (cfg.run.stride < 1) throw ParamError("config: run.stride must be >= 1");
    cfg.run.x0_radius = get_or<double>(r, "x0_radius", cfg.run.x0_radius);
    if (r.contains("x0_grad_target")) {
      cfg.run.x0_grad_target = r.at("x0_grad_target").get<double>();
    }
    if (r.contains("threshold")) cfg.run.threshold = r.at("threshold").get<double>();
    cfg.run.stop_at_first_hit =
        get_or<bool>(r, "stop_at_first_hit", cfg.run.stop_at_first_hit);
  }

  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    require_keys(s, "sweep", {"axis", "values"});
    SweepSpec sweep;
    sweep.axis = get_or<std::string>(s, "axis", "");
    sweep.values = get_or<std::vector<double>>(s, "values", {});
    if (sweep.axis != "epsilon" && sweep.axis != "n") {
      throw ParamError("config: sweep.axis must be 'epsilon' or 'n'");
    }
    if (sweep.values.empty()) throw ParamError("config: sweep.values must not be empty");
    cfg.sweep = std::move(sweep);
  }

  if (doc.contains("audit")) {
    const json& a = doc.at("audit");
    require_keys(a, "audit", {"kinds", "points", "pairs", "falsify_L0_factor"});
    AuditSpec audit;
    audit.kinds = get_or<std::vector<std::string>>(a, "kinds", {});
    if (audit.kinds.empty()) throw ParamError("config: audit.kinds must not be empty");
    for (const auto& k : audit.kinds) {
      if (k != "prop1" && k != "fit" && k != "descent") {
        throw ParamError("config: unknown audit kind '" + k + "'");
      }
    }
    audit.points = get_or<int>(a, "points", audit.points);
    audit.pairs = get_or<int>(a, "pairs", audit.pairs);
    audit.falsify_L0_factor = get_or<double>(a, "falsify_L0_factor", 1.0);
    cfg.audit = std::move(audit);
  }

  if (doc.contains("output")) {
    const json& o = doc.at("output");
    require_keys(o, "output", {"dir"});
    cfg.output_dir = get_or<std::string>(o, "dir", cfg.output_dir);
  }

  // Theorem-mode admissibility is checked before any oracle work.
  if (cfg.run.source == ParamsSource::theorem && cfg.run.problem.L0 &&
      cfg.run.problem.L1 && *cfg.run.problem.L1 > 0.0) {
    const double cap = *cfg.run.problem.L0 / (20.0 * *cfg.run.problem.L1);
    if (!(cfg.run.epsilon < cap)) {
      throw ParamError("config: epsilon " + std::to_string(cfg.run.epsilon) +
                       " inadmissible for theorem mode; requires epsilon < L0/(20 L1) = " +
                       std::to_string(cap));
    }
  }
  return cfg;
}

CliConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParamError("config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParamError("config: parse error in '" + path + "': " + e.what());
  }
  return parse_config(doc);
}

}  // namespace vrclip
