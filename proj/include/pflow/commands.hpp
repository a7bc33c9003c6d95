#ifndef PFLOW_COMMANDS_HPP
#define PFLOW_COMMANDS_HPP

#include <ostream>

#include "pflow/run_config.hpp"

namespace pflow {

// Each command writes its files under cfg.out_dir, prints a short report on
// `out`, diagnostics on `err`, and returns the process exit status.

// homotopy.csv and figure2.csv; prints J for the line and the optimal schedule.
int cmd_solve_homotopy(const RunConfig& cfg, std::ostream& out, std::ostream& err);
// filter.csv: terminal ensemble moments of one run under both schedules.
int cmd_run_filter(const RunConfig& cfg, std::ostream& out, std::ostream& err);
// table1.csv: per-run MSE and trP for both schedules plus an average row.
int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err);
// Randomized diagnostic suite; nonzero exit if any check fails.
int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace pflow

#endif  // PFLOW_COMMANDS_HPP
