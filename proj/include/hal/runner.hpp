#pragma once

#include <string>
#include <vector>

#include "hal/config.hpp"
#include "hal/runio.hpp"

namespace hal {

struct RunResult {
    std::string dir;
    double final_error_pct = 0.0;
    bool skipped = false;  // already complete and resume allowed
};

/// One configured training run, writing run.json, curves.csv, stats.json and
/// the checkpoint into its run directory under run_output_root().
/// With resume=true a directory holding a finished run.json is not re-run.
RunResult execute_run(const RunSetup& setup, bool resume = false);

/// Sequential case x repeat grid; failed runs are recorded and skipped.
/// Writes summary.csv under run_output_root() and returns its rows.
std::vector<SummaryRow> execute_matrix(const MatrixSetup& matrix, bool resume = true);

}  // namespace hal
