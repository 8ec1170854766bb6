#include "hal/config.hpp"

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>

namespace hal {

using nlohmann::json;

namespace {

SuperclassScheme scheme_from_case(DatasetKind dataset, const json& c) {
    if (c.is_string()) return builtin_scheme(dataset, case_from_string(c.get<std::string>()));
    if (c.is_object()) {
        if (!c.contains("name") || !c.contains("groups"))
            throw ConfigError("custom scheme needs 'name' and 'groups'");
        return SuperclassScheme::from_groups(
            c.at("name").get<std::string>(),
            c.at("groups").get<std::vector<std::vector<int>>>(),
            c.value("semantics", std::string{}));
    }
    throw ConfigError("'case' must be a case name or a custom scheme object");
}

std::string require_string(const json& doc, const std::string& key) {
    if (!doc.contains(key))
        throw ConfigError("missing required config key '" + key + "'");
    return doc.at(key).get<std::string>();
}

}  // namespace

RunSetup parse_run_config(const json& doc) {
    RunSetup s;
    s.dataset = dataset_from_string(require_string(doc, "dataset"));

    if (doc.contains("case") && !(doc.at("case").is_string() &&
                                  doc.at("case").get<std::string>() == "baseline")) {
        SuperclassScheme scheme = scheme_from_case(s.dataset, doc.at("case"));
        s.case_name = doc.at("case").is_string() ? doc.at("case").get<std::string>()
                                                 : scheme.name;
        s.train.scheme = std::move(scheme);
    }

    if (!doc.contains("data")) throw ConfigError("missing required config key 'data'");
    const json& data = doc.at("data");
    switch (s.dataset) {
        case DatasetKind::Mnist:
            s.train_images = require_string(data, "train_images");
            s.train_labels = require_string(data, "train_labels");
            s.test_images = require_string(data, "test_images");
            s.test_labels = require_string(data, "test_labels");
            break;
        case DatasetKind::Cifar10:
            if (!data.contains("train_batches"))
                throw ConfigError("missing required config key 'data.train_batches'");
            s.train_batches = data.at("train_batches").get<std::vector<std::string>>();
            if (!data.contains("test_batches"))
                throw ConfigError("missing required config key 'data.test_batches'");
            s.test_batches = data.at("test_batches").get<std::vector<std::string>>();
            break;
        case DatasetKind::Svhn:
            // no native container support; pre-converted tensors only
            s.train_raw = require_string(data, "train_raw");
            s.test_raw = require_string(data, "test_raw");
            break;
    }

    s.train.depth = doc.value("depth", 10);
    s.train.batch_size = doc.value("batch_size", std::size_t{128});
    s.train.epochs = doc.value("epochs", 250);
    s.train.lr_max = doc.value("lr_max", 1.0);
    s.train.lr_min = doc.value("lr_min", 0.0);
    s.train.momentum = doc.value("momentum", 0.9);
    s.train.weight_decay = doc.value("weight_decay", 0.0);
    s.train.seed = doc.value("seed", std::uint64_t{0});
    s.train.eval_every = doc.value("eval_every", 1);
    s.train.checkpoint_every = doc.value("checkpoint_every", 50);
    if (doc.contains("augment")) {
        const json& a = doc.at("augment");
        s.train.augment.pad = a.value("pad", std::size_t{4});
        s.train.augment.random_crop = a.value("random_crop", true);
        s.train.augment.horizontal_flip = a.value("horizontal_flip", true);
        s.train.augment.normalize = a.value("normalize", true);
    }
    if (doc.contains("subset_per_class") && !doc.at("subset_per_class").is_null())
        s.subset_per_class = doc.at("subset_per_class").get<std::size_t>();
    s.precision = doc.value("precision", std::string{"f32"});
    if (s.precision != "f32" && s.precision != "f64")
        throw ConfigError("precision must be 'f32' or 'f64'");
    s.run_dir_override = doc.value("run_dir", std::string{});
    s.train.validate();
    return s;
}

RunSetup load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(doc);
}

LabeledDataset load_train_split(const RunSetup& setup) {
    LabeledDataset ds;
    switch (setup.dataset) {
        case DatasetKind::Mnist:
            ds = load_mnist(setup.train_images, setup.train_labels);
            break;
        case DatasetKind::Cifar10:
            ds = load_cifar10(setup.train_batches);
            break;
        case DatasetKind::Svhn:
            ds = load_raw(setup.train_raw);
            break;
    }
    ds.split = Split::Train;
    if (setup.subset_per_class) ds = subset_per_class(ds, *setup.subset_per_class);
    compute_channel_stats(ds);
    if (setup.train.scheme) apply_scheme(ds, *setup.train.scheme);
    return ds;
}

LabeledDataset load_test_split(const RunSetup& setup) {
    LabeledDataset ds;
    switch (setup.dataset) {
        case DatasetKind::Mnist:
            ds = load_mnist(setup.test_images, setup.test_labels);
            break;
        case DatasetKind::Cifar10:
            ds = load_cifar10(setup.test_batches);
            break;
        case DatasetKind::Svhn:
            ds = load_raw(setup.test_raw);
            break;
    }
    ds.split = Split::Test;
    if (setup.train.scheme) apply_scheme(ds, *setup.train.scheme);
    return ds;
}

MatrixSetup load_matrix_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open matrix file '" + path + "'");
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("matrix '" + path + "' is not valid JSON: " + e.what());
    }
    MatrixSetup m;
    if (!doc.contains("cases")) throw ConfigError("missing required config key 'cases'");
    m.cases = doc.at("cases").get<std::vector<std::string>>();
    if (m.cases.empty()) throw ConfigError("'cases' must not be empty");
    m.repeats = doc.value("repeats", 5);
    if (m.repeats < 1) throw ConfigError("'repeats' must be >= 1");
    if (!doc.contains("base")) throw ConfigError("missing required config key 'base'");
    json base = doc.at("base");
    if (doc.contains("dataset")) base["dataset"] = doc.at("dataset");
    base.erase("case");
    m.base = parse_run_config(base);
    // validate every case name up front; the run loop re-derives the schemes
    for (const auto& c : m.cases)
        if (c != "baseline") (void)builtin_scheme(m.base.dataset, case_from_string(c));
    return m;
}

std::string run_output_root() {
    const char* env = std::getenv("HAL_RUN_DIR");
    return env && *env ? std::string(env) : std::string(".");
}

}  // namespace hal
