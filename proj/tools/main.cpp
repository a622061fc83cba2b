#include <CLI11.hpp>

#include "vrclip/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"vrclip: variance-reduced clipped optimization toolkit"};
  app.require_subcommand(1);

  std::string run_config, sweep_config, audit_config, report_dir;

  auto* run = app.add_subcommand("run", "execute the runs described by a config file");
  run->add_option("config", run_config, "config file (JSON)")->required();

  auto* sweep = app.add_subcommand("sweep", "oracle-complexity scaling sweep");
  sweep->add_option("config", sweep_config, "config file with a 'sweep' section")
      ->required();

  auto* audit = app.add_subcommand("audit", "smoothness / descent audits");
  audit->add_option("config", audit_config, "config file with an 'audit' section")
      ->required();

  auto* report = app.add_subcommand("report", "emit plot-ready tables from run outputs");
  report->add_option("dir", report_dir, "directory holding run outputs")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return vrclip::cmd_run(run_config);
  if (sweep->parsed()) return vrclip::cmd_sweep(sweep_config);
  if (audit->parsed()) return vrclip::cmd_audit(audit_config);
  if (report->parsed()) return vrclip::cmd_report(report_dir);
  return 2;
}
