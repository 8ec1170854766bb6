#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "hal/dataset.hpp"
#include "hal/train.hpp"

namespace hal {

/// Everything one run needs: dataset location, scheme choice, knobs.
struct RunSetup {
    DatasetKind dataset = DatasetKind::Mnist;
    std::string case_name = "baseline";
    TrainConfig train;             // train.scheme mirrors case_name
    std::string precision = "f32"; // "f32" or "f64"
    std::optional<std::size_t> subset_per_class;

    // mnist/svhn-style IDX pairs
    std::string train_images, train_labels, test_images, test_labels;
    // cifar10 binary batches
    std::vector<std::string> train_batches, test_batches;
    // pre-converted raw tensor files
    std::string train_raw, test_raw;

    std::string run_dir_override;

    std::string default_run_dir_name() const {
        return dataset_to_string(dataset) + "_" + case_name + "_" +
               std::to_string(train.seed);
    }
};

RunSetup parse_run_config(const nlohmann::json& doc);
RunSetup load_run_config(const std::string& path);

/// Load the split named by the setup; computes stats and applies the scheme
/// on the training split.
LabeledDataset load_train_split(const RunSetup& setup);
LabeledDataset load_test_split(const RunSetup& setup);

struct MatrixSetup {
    std::vector<std::string> cases;  // "baseline", "case1".."case4"
    int repeats = 5;
    RunSetup base;
};

MatrixSetup load_matrix_config(const std::string& path);

/// Output root: HAL_RUN_DIR env var, else the current directory.
std::string run_output_root();

}  // namespace hal
