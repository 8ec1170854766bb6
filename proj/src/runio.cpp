#include "hal/runio.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace hal {

using nlohmann::json;

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw ConfigError("cannot create directory '" + path + "': " + ec.message());
}

void write_stats_json(const std::string& path, const std::vector<double>& mean,
                      const std::vector<double>& stdev) {
    json doc;
    doc["mean"] = mean;
    doc["std"] = stdev;
    std::ofstream f(path);
    f << doc.dump(2) << "\n";
}

namespace {

json setup_snapshot(const RunSetup& setup) {
    json doc;
    doc["dataset"] = dataset_to_string(setup.dataset);
    doc["case"] = setup.case_name;
    if (setup.train.scheme) {
        doc["scheme"] = {{"name", setup.train.scheme->name},
                         {"groups", setup.train.scheme->groups()},
                         {"semantics", setup.train.scheme->semantics}};
    }
    doc["depth"] = setup.train.depth;
    doc["batch_size"] = setup.train.batch_size;
    doc["epochs"] = setup.train.epochs;
    doc["lr_max"] = setup.train.lr_max;
    doc["lr_min"] = setup.train.lr_min;
    doc["momentum"] = setup.train.momentum;
    doc["weight_decay"] = setup.train.weight_decay;
    doc["seed"] = setup.train.seed;
    doc["precision"] = setup.precision;
    doc["eval_every"] = setup.train.eval_every;
    doc["augment"] = {{"pad", setup.train.augment.pad},
                      {"random_crop", setup.train.augment.random_crop},
                      {"horizontal_flip", setup.train.augment.horizontal_flip},
                      {"normalize", setup.train.augment.normalize}};
    if (setup.subset_per_class) doc["subset_per_class"] = *setup.subset_per_class;
    return doc;
}

}  // namespace

void write_run_json(const std::string& path, const RunSetup& setup, const RunRecord& rec) {
    json doc;
    doc["config"] = setup_snapshot(setup);
    doc["train_loss"] = rec.train_loss;
    json evals = json::array();
    for (const auto& e : rec.evals)
        evals.push_back({{"epoch", e.epoch},
                         {"test_loss", e.test_loss},
                         {"test_error", e.test_error_pct}});
    doc["evals"] = evals;
    doc["final_test_loss"] = rec.final_test_loss;
    doc["final_test_error"] = rec.final_test_error_pct;
    doc["wall_time_sec"] = rec.wall_time_sec;
    doc["checkpoint"] = rec.checkpoint_path;
    std::ofstream f(path);
    f << doc.dump(2) << "\n";
}

std::optional<double> read_run_final_error(const std::string& path) {
    std::ifstream f(path);
    if (!f) return std::nullopt;
    json doc = json::parse(f, nullptr, false);
    if (doc.is_discarded() || !doc.contains("final_test_error")) return std::nullopt;
    return doc.at("final_test_error").get<double>();
}

void write_curves_csv(const std::string& path, const RunRecord& rec) {
    std::ofstream f(path);
    f << "epoch,train_loss,test_loss,test_error\n";
    char buf[160];
    for (const auto& e : rec.evals) {
        double tl = rec.train_loss.at(static_cast<std::size_t>(e.epoch - 1));
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", e.epoch, tl, e.test_loss,
                      e.test_error_pct);
        f << buf;
    }
}

void write_aux_scores_csv(const std::string& path, const std::vector<AuxScoreRow>& rows) {
    std::ofstream f(path);
    f << "index,superclass,score\n";
    char buf[96];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%zu,%d,%.9g\n", r.index, r.superclass, r.score);
        f << buf;
    }
}

std::vector<AuxScoreRow> read_aux_scores_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open scores csv '" + path + "'");
    std::string line;
    if (!std::getline(f, line) || line != "index,superclass,score")
        throw FormatError("scores csv '" + path + "': bad header");
    std::vector<AuxScoreRow> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        AuxScoreRow r;
        std::istringstream ss(line);
        char c1, c2;
        if (!(ss >> r.index >> c1 >> r.superclass >> c2 >> r.score) || c1 != ',' || c2 != ',')
            throw FormatError("scores csv '" + path + "': bad row '" + line + "'");
        rows.push_back(r);
    }
    return rows;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
    std::ofstream f(path);
    f << "case,mean_error,std_error,runs\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%d\n", r.case_name.c_str(),
                      r.mean_error, r.std_error, r.runs);
        f << buf;
    }
}

std::string format_mean_std(double mean, double stdev) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean, stdev);
    return buf;
}

}  // namespace hal
