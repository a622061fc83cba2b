#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vrclip/harness.hpp"
#include "vrclip/smoothlab.hpp"

namespace vrclip {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr const char* kTraceHeader =
    "k,F,grad_norm,v_norm,eta,calls_paper,calls_eval,est_err_sq,local_smoothness";

// Round-trippable decimal rendering of a double ("" for NaN trace blanks).
std::string format_double(double v);

std::string trace_to_csv(const std::vector<IterationRecord>& trace);
std::vector<IterationRecord> trace_from_csv(const std::string& csv);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

nlohmann::json summary_to_json(const RunSummary& s);
RunSummary summary_from_json(const nlohmann::json& j);

nlohmann::json scaling_to_json(const ScalingReport& r);
nlohmann::json fit_to_json(const L0L1Fit& fit);
L0L1Fit fit_from_json(const nlohmann::json& j);

// FNV-1a 64 over the canonical (sorted-key) dump; used to content-address
// output directories.
std::string config_hash(const nlohmann::json& doc);

}  // namespace vrclip
