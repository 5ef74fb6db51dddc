#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bgan/avb.hpp"
#include "bgan/config.hpp"
#include "bgan/evalmetrics.hpp"
#include "bgan/refine.hpp"

namespace bgan::pipeline {

/// Reference table with X replaced by its summary statistics.
ReferenceTable summarize_table(const ReferenceTable& table, const SimulatorModel& sim);

/// Simulator view whose outputs are the summary statistics; used when a
/// method trains on summaries instead of the raw series.
SimulatorModel summarized_view(const SimulatorModel& sim);

TrainConfig train_config_from(const Config& cfg, const std::string& section,
                              const TrainConfig& defaults);

struct TwoStepSections {
    TwoStepConfig two_step;
    std::size_t avb_table_rows = 50000;
    TrainConfig avb_train;
    WeightMethod avb_weight_method = WeightMethod::Auto;
};
TwoStepSections refine_config_from(const Config& cfg, const TrainConfig& pilot);

/// Run directory for a (config, seed, tag) triple; created on demand.
std::string run_dir(const std::string& out_root, const Config& cfg, std::uint64_t seed,
                    const std::string& tag);

struct TableResult {
    std::string base_path;  // files at base_path.table.csv / base_path.meta.json
    std::string dir;
};
TableResult cmd_table(const Config& cfg, const std::string& out_root,
                      std::optional<std::uint64_t> seed_override, int workers = 0);

struct TrainResult {
    std::string dir;
    std::string checkpoint;
    std::string samples;
    std::string losses;
    WeightedPosterior posterior;
    double seconds = 0.0;
};
/// method is one of bgan, bgan-js, bgan-2s, bgan-vb. bgan-2s and bgan-vb
/// need x0 during training; bgan and bgan-js read it only to sample.
TrainResult cmd_train(const std::string& method, const Config& cfg, const std::string& x0_path,
                      const std::string& out_root, std::optional<std::uint64_t> seed_override,
                      int workers = 0, const std::string& table_base = "");

struct AbcResult {
    std::string samples;
    WeightedPosterior posterior;
    double seconds = 0.0;
};
/// method is ss or w2; accepted draws written with uniform weights.
AbcResult cmd_abc(const std::string& method, const std::string& table_base,
                  const std::string& x0_path, double accept_fraction,
                  const std::string& out_dir);

struct EvalInput {
    std::string name;
    WeightedPosterior posterior;
};
struct EvalOutput {
    std::vector<EvalReport> reports;
    std::string report_json;
    std::string comparison_csv;
};
EvalOutput cmd_eval(const std::vector<std::string>& sample_files, const Vector& theta0,
                    const std::string& reference_file, const std::string& out_dir,
                    const std::vector<bool>& fold_abs = {});

struct ReproduceResult {
    std::string dir;
    std::vector<std::pair<std::string, double>> timings;  // per stage, seconds
};
/// experiment in {toy, lv, bnb}, scale in {desk, paper}: generates the
/// observed data from the canonical true parameters, builds the table,
/// trains every method, runs both rejection baselines, and evaluates.
ReproduceResult cmd_reproduce(const std::string& experiment, const std::string& scale,
                              std::uint64_t seed, const std::string& out_root, int workers = 0);

/// Built-in recipe text for an experiment and scale.
std::string reproduce_recipe(const std::string& experiment, const std::string& scale);
Vector reproduce_theta0(const std::string& experiment);

}  // namespace bgan::pipeline
