#include <CLI11.hpp>
#include <cstdio>

#include "hal/gradcheck.hpp"
#include "hal/runner.hpp"
#include "hal/scores.hpp"
#include "hal/serialize.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNanAbort = 3;

int cmd_train(const std::string& config_path) {
    hal::RunSetup setup = hal::load_run_config(config_path);
    hal::RunResult r = hal::execute_run(setup, false);
    std::printf("run complete: %s, final test error %.2f%%\n", r.dir.c_str(),
                r.final_error_pct);
    return 0;
}

int cmd_matrix(const std::string& matrix_path) {
    hal::MatrixSetup m = hal::load_matrix_config(matrix_path);
    hal::execute_matrix(m, true);
    std::printf("summary written to %s/summary.csv\n", hal::run_output_root().c_str());
    return 0;
}

int cmd_gradcheck() {
    auto report = hal::run_gradcheck();
    bool all_pass = true;
    for (const auto& e : report) {
        std::printf("%-22s max rel err %.3e (threshold %.0e) %s\n", e.layer.c_str(),
                    e.max_rel_err, e.threshold, e.pass ? "PASS" : "FAIL");
        all_pass = all_pass && e.pass;
    }
    return all_pass ? 0 : 1;
}

template <typename T>
int export_aux_impl(const std::string& ckpt_path, const hal::RunSetup& setup,
                    const std::string& out_path) {
    if (!setup.train.scheme)
        throw hal::ConfigError("export-aux: config selects no superclass case");
    const auto& scheme = *setup.train.scheme;

    // the checkpoint's aux weights must agree with the configured scheme
    auto tensors = hal::read_named_tensors(ckpt_path);
    bool found = false;
    for (const auto& nt : tensors)
        if (nt.name == "aux.w") {
            found = true;
            if (nt.tensor.shape[1] != static_cast<std::size_t>(scheme.num_superclasses))
                throw hal::ConfigError(
                    "export-aux: checkpoint was trained with " +
                    std::to_string(nt.tensor.shape[1]) + " superclasses, scheme '" +
                    scheme.name + "' has " + std::to_string(scheme.num_superclasses));
        }
    if (!found) throw hal::ConfigError("export-aux: checkpoint has no auxiliary block");

    hal::LabeledDataset train_ds = hal::load_train_split(setup);
    hal::Rng rng(setup.train.seed);
    hal::ResNet<T> net(hal::network_spec_for(setup.train), train_ds.channels(), rng);
    hal::load_network(net, ckpt_path);
    auto rows = hal::aux_scores_over_dataset<T>(net, train_ds, scheme,
                                                train_ds.channel_mean,
                                                train_ds.channel_std);
    hal::write_aux_scores_csv(out_path, rows);
    std::printf("%zu scores written to %s\n", rows.size(), out_path.c_str());
    for (const auto& g : hal::group_score_stats(rows, scheme.num_superclasses))
        std::printf("superclass %d: n=%zu mean=%.6f std=%.6f\n", g.superclass, g.count,
                    g.mean, g.stdev);
    // scalar proxy for the visual split of the score scatter (not from the
    // experiment protocol itself)
    std::printf("separation statistic: %.4f\n",
                hal::separation_statistic(rows, scheme.num_superclasses));
    return 0;
}

template <typename T>
int eval_impl(const std::string& ckpt_path, const hal::RunSetup& setup) {
    hal::LabeledDataset train_ds = hal::load_train_split(setup);
    hal::LabeledDataset test_ds = hal::load_test_split(setup);
    hal::Rng rng(setup.train.seed);
    hal::ResNet<T> net(hal::network_spec_for(setup.train), train_ds.channels(), rng);
    hal::load_network(net, ckpt_path);
    auto [loss, err] = hal::evaluate(net, test_ds, setup.train.scheme,
                                     train_ds.channel_mean, train_ds.channel_std);
    std::printf("test loss %.6f, test error %.2f%%\n", loss, err);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical auxiliary learning trainer"};
    app.require_subcommand(1);

    std::string config_path, matrix_path, ckpt_path, out_path = "aux_scores.csv";

    auto* train_cmd = app.add_subcommand("train", "run one training config");
    train_cmd->add_option("config", config_path, "run config JSON")->required();

    auto* matrix_cmd = app.add_subcommand("matrix", "run a case x seed experiment grid");
    matrix_cmd->add_option("matrix", matrix_path, "matrix config JSON")->required();

    auto* grad_cmd = app.add_subcommand("gradcheck",
                                        "finite-difference check of every layer");

    auto* export_cmd = app.add_subcommand("export-aux",
                                          "export per-sample auxiliary scores as CSV");
    export_cmd->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
    export_cmd->add_option("config", config_path, "run config JSON")->required();
    export_cmd->add_option("--out", out_path, "output CSV path");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    eval_cmd->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
    eval_cmd->add_option("config", config_path, "run config JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(config_path);
        if (matrix_cmd->parsed()) return cmd_matrix(matrix_path);
        if (grad_cmd->parsed()) return cmd_gradcheck();
        if (export_cmd->parsed()) {
            hal::RunSetup setup = hal::load_run_config(config_path);
            return setup.precision == "f64"
                       ? export_aux_impl<double>(ckpt_path, setup, out_path)
                       : export_aux_impl<float>(ckpt_path, setup, out_path);
        }
        if (eval_cmd->parsed()) {
            hal::RunSetup setup = hal::load_run_config(config_path);
            return setup.precision == "f64" ? eval_impl<double>(ckpt_path, setup)
                                            : eval_impl<float>(ckpt_path, setup);
        }
    } catch (const hal::TrainAbort& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNanAbort;
    } catch (const hal::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
