#include "hal/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "hal/serialize.hpp"

namespace hal {

namespace {

template <typename T>
RunResult run_impl(const RunSetup& setup, const std::string& dir) {
    LabeledDataset train_ds = load_train_split(setup);
    LabeledDataset test_ds = load_test_split(setup);
    write_stats_json(dir + "/stats.json", train_ds.channel_mean, train_ds.channel_std);

    Rng init_rng(setup.train.seed);
    ResNet<T> net(network_spec_for(setup.train), train_ds.channels(), init_rng);
    std::string ckpt = dir + "/checkpoint.bin";
    RunRecord rec = train<T>(setup.train, train_ds, test_ds, net,
                             [&](int) { save_network(net, ckpt); });
    rec.checkpoint_path = ckpt;
    write_run_json(dir + "/run.json", setup, rec);
    write_curves_csv(dir + "/curves.csv", rec);
    return {dir, rec.final_test_error_pct, false};
}

}  // namespace

RunResult execute_run(const RunSetup& setup, bool resume) {
    std::string dir = run_output_root() + "/" +
                      (setup.run_dir_override.empty() ? setup.default_run_dir_name()
                                                      : setup.run_dir_override);
    if (resume) {
        auto prev = read_run_final_error(dir + "/run.json");
        if (prev) return {dir, *prev, true};
    }
    ensure_dir(dir);
    if (setup.precision == "f64") return run_impl<double>(setup, dir);
    return run_impl<float>(setup, dir);
}

std::vector<SummaryRow> execute_matrix(const MatrixSetup& matrix, bool resume) {
    std::vector<SummaryRow> rows;
    for (const auto& case_name : matrix.cases) {
        std::vector<double> errors;
        for (int k = 0; k < matrix.repeats; ++k) {
            RunSetup setup = matrix.base;
            setup.case_name = case_name;
            setup.run_dir_override.clear();
            if (case_name == "baseline")
                setup.train.scheme.reset();
            else
                setup.train.scheme = builtin_scheme(setup.dataset,
                                                    case_from_string(case_name));
            setup.train.seed = matrix.base.train.seed + static_cast<std::uint64_t>(k);
            try {
                RunResult r = execute_run(setup, resume);
                // summary is recomputed from the persisted run.json, so the
                // printed table always matches the artifacts on disk
                auto err = read_run_final_error(r.dir + "/run.json");
                if (err) errors.push_back(*err);
                std::printf("run %-24s seed %llu: %s error %.2f%%\n",
                            setup.default_run_dir_name().c_str(),
                            static_cast<unsigned long long>(setup.train.seed),
                            r.skipped ? "skipped," : "done,", r.final_error_pct);
            } catch (const std::exception& e) {
                std::printf("run %s_%llu FAILED: %s\n", case_name.c_str(),
                            static_cast<unsigned long long>(setup.train.seed), e.what());
            }
            std::fflush(stdout);
        }
        double mean = 0.0, stdev = 0.0;
        if (!errors.empty()) {
            for (double e : errors) mean += e;
            mean /= static_cast<double>(errors.size());
            if (errors.size() > 1) {
                for (double e : errors) stdev += (e - mean) * (e - mean);
                stdev = std::sqrt(stdev / static_cast<double>(errors.size() - 1));
            }
        }
        rows.push_back({case_name, mean, stdev, static_cast<int>(errors.size())});
        std::printf("%-10s %s (%zu runs)\n", case_name.c_str(),
                    format_mean_std(mean, stdev).c_str(), errors.size());
    }
    write_summary_csv(run_output_root() + "/summary.csv", rows);
    return rows;
}

}  // namespace hal
