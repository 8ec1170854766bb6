#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hal/aux_block.hpp"
#include "hal/config.hpp"
#include "hal/train.hpp"

namespace hal {

void ensure_dir(const std::string& path);

void write_stats_json(const std::string& path, const std::vector<double>& mean,
                      const std::vector<double>& stdev);

void write_run_json(const std::string& path, const RunSetup& setup, const RunRecord& rec);

/// Reads final_test_error_pct back from run.json; nullopt if absent/invalid.
std::optional<double> read_run_final_error(const std::string& path);

/// curves.csv: epoch,train_loss,test_loss,test_error (one row per eval point)
void write_curves_csv(const std::string& path, const RunRecord& rec);

/// aux_scores.csv: index,superclass,score with 9 significant digits
void write_aux_scores_csv(const std::string& path, const std::vector<AuxScoreRow>& rows);
std::vector<AuxScoreRow> read_aux_scores_csv(const std::string& path);

struct SummaryRow {
    std::string case_name;
    double mean_error;
    double std_error;
    int runs;
};

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

/// "0.69 ± 0.00" style formatting used by the matrix summary table.
std::string format_mean_std(double mean, double stdev);

}  // namespace hal
