#pragma once

#include <string>

namespace vrclip {

// Exit codes: 0 success, 1 audit violations, 2 usage/config error, 3 runtime
// oracle failure. Run success/failure is data in the summary, not an exit
// status.
int cmd_run(const std::string& config_path);
int cmd_sweep(const std::string& config_path);
int cmd_audit(const std::string& config_path);
int cmd_report(const std::string& run_dir);

}  // namespace vrclip
