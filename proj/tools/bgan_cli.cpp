#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bgan/kernels.hpp"
#include "bgan/pipeline.hpp"

namespace {

std::optional<std::uint64_t> seed_opt(long seed) {
    if (seed < 0) return std::nullopt;
    return static_cast<std::uint64_t>(seed);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Likelihood-free posterior sampling with conditional generative networks"};
    app.require_subcommand(1);
    app.fallthrough();  // accept global options after the subcommand

    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");
    bool serial = false;
    app.add_flag("--serial", serial, "Use the serial reference kernels");

    std::string out_root = "runs";
    app.add_option("--out", out_root, "Output root directory")->capture_default_str();

    // table
    auto* table_cmd = app.add_subcommand("table", "Generate a reference table from a config");
    std::string table_config;
    long table_seed = -1;
    table_cmd->add_option("config", table_config, "Config file")->required();
    table_cmd->add_option("--seed", table_seed, "Override the table seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a sampler and draw from it at x0");
    std::string train_method, train_config, train_x0, train_table;
    long train_seed = -1;
    train_cmd->add_option("--method", train_method, "bgan | bgan-js | bgan-2s | bgan-vb")
        ->required();
    train_cmd->add_option("--config", train_config, "Config file")->required();
    train_cmd->add_option("--x0", train_x0, "Observed-data CSV")->required();
    train_cmd->add_option("--table", train_table, "Existing table base path (reused if given)");
    train_cmd->add_option("--seed", train_seed, "Override the training seed");

    // abc
    auto* abc_cmd = app.add_subcommand("abc", "Rejection-ABC baseline on a saved table");
    std::string abc_method, abc_table, abc_x0, abc_out = ".";
    double abc_q = 0.01;
    abc_cmd->add_option("--method", abc_method, "ss | w2")->required();
    abc_cmd->add_option("--table", abc_table, "Table base path")->required();
    abc_cmd->add_option("--x0", abc_x0, "Observed-data CSV")->required();
    abc_cmd->add_option("--q", abc_q, "Accept fraction")->capture_default_str();
    abc_cmd->add_option("--out-dir", abc_out, "Directory for the accepted draws");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Summarize posterior sample files");
    std::vector<std::string> eval_files;
    std::string eval_theta0, eval_reference, eval_out = ".", eval_fold;
    eval_cmd->add_option("samples", eval_files, "Sample CSV files")->required();
    eval_cmd->add_option("--theta0", eval_theta0, "True parameters, comma separated")->required();
    eval_cmd->add_option("--reference", eval_reference, "Reference draws for the MMD column");
    eval_cmd->add_option("--fold-abs", eval_fold,
                         "Comma-separated 0/1 flags marking sign-folded parameters");
    eval_cmd->add_option("--out-dir", eval_out, "Directory for the reports");

    // reproduce
    auto* rep_cmd = app.add_subcommand("reproduce", "End-to-end experiment recipe");
    std::string rep_experiment, rep_scale = "desk";
    long rep_seed = 1;
    rep_cmd->add_option("--experiment", rep_experiment, "toy | lv | bnb")->required();
    rep_cmd->add_option("--scale", rep_scale, "desk | paper")->capture_default_str();
    rep_cmd->add_option("--seed", rep_seed, "Master seed")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    bgan::kernels::set_serial(serial);
    bgan::kernels::set_threads(threads);

    try {
        if (*table_cmd) {
            const bgan::Config cfg = bgan::Config::parse_file(table_config);
            const auto res = bgan::pipeline::cmd_table(cfg, out_root, seed_opt(table_seed), threads);
            std::printf("table: %s.table.csv\n", res.base_path.c_str());
        } else if (*train_cmd) {
            const bgan::Config cfg = bgan::Config::parse_file(train_config);
            const auto res = bgan::pipeline::cmd_train(train_method, cfg, train_x0, out_root,
                                                       seed_opt(train_seed), threads, train_table);
            std::printf("checkpoint: %s\nsamples: %s\nlosses: %s\n(%.1fs)\n",
                        res.checkpoint.c_str(), res.samples.c_str(), res.losses.c_str(),
                        res.seconds);
        } else if (*abc_cmd) {
            const auto res = bgan::pipeline::cmd_abc(abc_method, abc_table, abc_x0, abc_q, abc_out);
            std::printf("accepted draws: %s (%.1fs)\n", res.samples.c_str(), res.seconds);
        } else if (*eval_cmd) {
            bgan::Vector theta0;
            for (const auto& cell : CLI::detail::split(eval_theta0, ','))
                theta0.push_back(std::stod(cell));
            std::vector<bool> fold;
            if (!eval_fold.empty())
                for (const auto& cell : CLI::detail::split(eval_fold, ','))
                    fold.push_back(cell == "1" || cell == "true");
            const auto res =
                bgan::pipeline::cmd_eval(eval_files, theta0, eval_reference, eval_out, fold);
            std::printf("report: %s\ncomparison: %s\n", res.report_json.c_str(),
                        res.comparison_csv.c_str());
        } else if (*rep_cmd) {
            const auto res = bgan::pipeline::cmd_reproduce(
                rep_experiment, rep_scale, static_cast<std::uint64_t>(rep_seed), out_root,
                threads);
            std::printf("run directory: %s\n", res.dir.c_str());
            for (const auto& [stage, secs] : res.timings)
                std::printf("  %-12s %8.1fs\n", stage.c_str(), secs);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
