#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vrclip/harness.hpp"

namespace vrclip {

struct SweepSpec {
  std::string axis;  // "epsilon" | "n"
  std::vector<double> values;
};

struct AuditSpec {
  std::vector<std::string> kinds;  // prop1 | fit | descent
  int points = 50;                 // prop1 sample points
  int pairs = 20;                  // prop1 pairs per point
  double falsify_L0_factor = 1.0;  // descent audit runs with L0 scaled by this
};

// A fully parsed config file. `echo` keeps the original document so outputs
// can embed it verbatim.
struct CliConfig {
  RunConfig run;
  std::optional<SweepSpec> sweep;
  std::optional<AuditSpec> audit;
  std::string output_dir = "out";
  nlohmann::json echo;
};

// Strict parse: unknown keys anywhere in the document are rejected with the
// offending JSON path. Throws ParamError on any schema problem.
CliConfig parse_config(const nlohmann::json& doc);
CliConfig parse_config_file(const std::string& path);

}  // namespace vrclip
