#include "bgan/pipeline.hpp"

#include <chrono>
#include <filesystem>

#include <json.hpp>

#include "bgan/abc.hpp"
#include "bgan/io.hpp"
#include "bgan/kernels.hpp"

namespace bgan::pipeline {

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Activation activation_from(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "leaky_relu") return Activation::LeakyRelu;
    throw std::runtime_error("unknown activation '" + name + "'");
}

InitScheme init_from(const std::string& name) {
    if (name == "he_uniform") return InitScheme::HeUniform;
    if (name == "zeros") return InitScheme::Zeros;
    throw std::runtime_error("unknown init scheme '" + name + "'");
}

WeightMethod weight_method_from(const std::string& name) {
    if (name == "auto") return WeightMethod::Auto;
    if (name == "kde") return WeightMethod::Kde;
    if (name == "classifier") return WeightMethod::Classifier;
    throw std::runtime_error("unknown weight method '" + name + "'");
}

}  // namespace

ReferenceTable summarize_table(const ReferenceTable& table, const SimulatorModel& sim) {
    require(static_cast<bool>(sim.summary), sim.name + " has no summary statistics");
    ReferenceTable out;
    out.theta = table.theta;
    out.x = Matrix(table.rows(), sim.d_summary);
    kernels::parallel_rows(table.rows(), [&](std::size_t i) {
        out.x.set_row(i, sim.summary(table.x.row(i)));
    });
    out.meta = table.meta;
    out.meta.simulator = table.meta.simulator + ":summary";
    return out;
}

SimulatorModel summarized_view(const SimulatorModel& sim) {
    require(static_cast<bool>(sim.summary), sim.name + " has no summary statistics");
    SimulatorModel view = sim;
    view.d_x = sim.d_summary;
    view.sampler = [raw_sampler = sim.sampler, summary = sim.summary](
                       std::span<const double> theta, RngStream& rng) {
        SimResult raw = raw_sampler(theta, rng);
        return SimResult{summary(raw.x), raw.truncated};
    };
    view.log_lik = nullptr;
    return view;
}

TrainConfig train_config_from(const Config& cfg, const std::string& section,
                              const TrainConfig& defaults) {
    TrainConfig t = defaults;
    t.batch_size = static_cast<std::size_t>(cfg.get_long(section, "batch_size",
                                                         static_cast<long>(t.batch_size)));
    t.epochs = static_cast<std::size_t>(cfg.get_long(section, "epochs",
                                                     static_cast<long>(t.epochs)));
    t.steps_per_epoch = static_cast<std::size_t>(
        cfg.get_long(section, "steps_per_epoch", static_cast<long>(t.steps_per_epoch)));
    t.n_critic = static_cast<std::size_t>(cfg.get_long(section, "n_critic",
                                                       static_cast<long>(t.n_critic)));
    t.lambda = cfg.get_double(section, "lambda", t.lambda);
    const double lr = cfg.get_double(section, "lr", 0.0);
    if (lr > 0.0) t.lr_gen = t.lr_critic = lr;
    t.lr_gen = cfg.get_double(section, "lr_gen", t.lr_gen);
    t.lr_critic = cfg.get_double(section, "lr_critic", t.lr_critic);
    t.d_z = static_cast<std::size_t>(cfg.get_long(section, "d_z", static_cast<long>(t.d_z)));
    t.gen_hidden = cfg.get_size_list(section, "gen_hidden", t.gen_hidden);
    t.critic_hidden = cfg.get_size_list(section, "critic_hidden", t.critic_hidden);
    t.activation = activation_from(cfg.get_string(
        section, "activation", t.activation == Activation::Relu ? "relu" : "leaky_relu"));
    t.leaky_slope = cfg.get_double(section, "leaky_slope", t.leaky_slope);
    t.dropout = cfg.get_double(section, "dropout", t.dropout);
    t.init = init_from(cfg.get_string(section, "init",
                                      t.init == InitScheme::HeUniform ? "he_uniform" : "zeros"));
    t.seed = cfg.get_u64(section, "seed", t.seed);
    t.standardize = cfg.get_bool(section, "standardize", t.standardize);
    return t;
}

TwoStepSections refine_config_from(const Config& cfg, const TrainConfig& pilot) {
    TwoStepSections out;
    TrainConfig refine_defaults = pilot;
    refine_defaults.batch_size = 1280;
    refine_defaults.n_critic = 20;
    refine_defaults.lambda = 10.0;
    refine_defaults.gen_hidden = {256, 256};
    refine_defaults.critic_hidden = {256, 256};
    out.two_step.pilot = pilot;
    out.two_step.refine = train_config_from(cfg, "refine", refine_defaults);
    out.two_step.table2_rows = static_cast<std::size_t>(cfg.get_long("refine", "table_rows", 50000));
    out.two_step.rounds = static_cast<std::size_t>(cfg.get_long("refine", "rounds", 1));
    out.two_step.weight_method =
        weight_method_from(cfg.get_string("refine", "weight_method", "auto"));
    out.two_step.kde_support_cap =
        static_cast<std::size_t>(cfg.get_long("refine", "kde_support", 10000));

    out.avb_train = train_config_from(cfg, "avb", out.two_step.refine);
    out.avb_table_rows = static_cast<std::size_t>(
        cfg.get_long("avb", "table_rows", static_cast<long>(out.two_step.table2_rows)));
    out.avb_weight_method = weight_method_from(cfg.get_string("avb", "weight_method", "auto"));
    return out;
}

std::string run_dir(const std::string& out_root, const Config& cfg, std::uint64_t seed,
                    const std::string& tag) {
    const std::string key = cfg.canonical() + "\nseed=" + std::to_string(seed) + "\ntag=" + tag;
    const std::string dir = out_root + "/" + tag + "-" + io::hash_hex(key);
    io::ensure_dir(dir);
    return dir;
}

TableResult cmd_table(const Config& cfg, const std::string& out_root,
                      std::optional<std::uint64_t> seed_override, int workers) {
    const std::string sim_name = cfg.get_string("table", "simulator");
    const SimulatorModel& sim = simulator_by_name(sim_name);
    const long rows = cfg.get_long("table", "rows");
    require(rows >= 1, "table: rows must be positive");
    const std::uint64_t seed = seed_override.value_or(cfg.get_u64("table", "seed", 1));

    TableResult res;
    res.dir = run_dir(out_root, cfg, seed, "table");
    res.base_path = res.dir + "/table";
    const ReferenceTable table =
        generate_table(sim, static_cast<std::size_t>(rows), seed, workers);
    save_table(table, res.base_path);
    return res;
}

namespace {

struct TrainInputs {
    const SimulatorModel* base_sim;
    SimulatorModel train_sim;  // summarized view when input = summary
    ReferenceTable train_table;
    bool summary_input = false;
    std::uint64_t table_seed = 0;
};

TrainInputs prepare_train_inputs(const Config& cfg, std::optional<std::uint64_t> seed_override,
                                 int workers, const std::string& table_base) {
    TrainInputs in;
    const std::string sim_name = cfg.get_string("table", "simulator");
    in.base_sim = &simulator_by_name(sim_name);
    in.summary_input = cfg.get_string("train", "input", "raw") == "summary";

    ReferenceTable raw;
    if (!table_base.empty()) {
        raw = load_table(table_base);
        require(raw.meta.simulator == sim_name,
                "train: table simulator does not match the config");
        in.table_seed = raw.meta.seed;
    } else {
        const long rows = cfg.get_long("table", "rows");
        in.table_seed = seed_override.value_or(cfg.get_u64("table", "seed", 1));
        raw = generate_table(*in.base_sim, static_cast<std::size_t>(rows), in.table_seed,
                             workers);
    }
    if (in.summary_input) {
        in.train_sim = summarized_view(*in.base_sim);
        in.train_table = summarize_table(raw, *in.base_sim);
    } else {
        in.train_sim = *in.base_sim;
        in.train_table = std::move(raw);
    }
    return in;
}

Vector load_x0_for(const TrainInputs& in, const std::string& x0_path) {
    Vector x0 = io::read_row_csv(x0_path);
    if (x0.size() != in.base_sim->d_x)
        throw std::runtime_error("x0 length " + std::to_string(x0.size()) +
                                 " does not match simulator dimension " +
                                 std::to_string(in.base_sim->d_x));
    return in.summary_input ? in.base_sim->summary(x0) : x0;
}

std::string table_identity(const TrainInputs& in) {
    return in.train_table.meta.simulator + ":" + std::to_string(in.train_table.rows()) + ":" +
           std::to_string(in.table_seed);
}

}  // namespace

TrainResult cmd_train(const std::string& method, const Config& cfg, const std::string& x0_path,
                      const std::string& out_root, std::optional<std::uint64_t> seed_override,
                      int workers, const std::string& table_base) {
    if (method != "bgan" && method != "bgan-js" && method != "bgan-2s" && method != "bgan-vb")
        throw std::runtime_error("unknown method '" + method +
                                 "'; expected bgan, bgan-js, bgan-2s or bgan-vb");
    const double t0 = now_seconds();
    TrainInputs in = prepare_train_inputs(cfg, seed_override, workers, table_base);
    TrainConfig tcfg = train_config_from(cfg, "train", TrainConfig{});
    if (seed_override) tcfg.seed = *seed_override;
    const std::size_t draws =
        static_cast<std::size_t>(cfg.get_long("train", "draws", 1000));
    const Vector x0 = load_x0_for(in, x0_path);

    TrainResult res;
    res.dir = run_dir(out_root, cfg, tcfg.seed, "train-" + method);

    GeneratorArtifact art;
    WeightedPosterior posterior;
    if (method == "bgan" || method == "bgan-js") {
        art = method == "bgan" ? train_bgan(in.train_table, tcfg)
                               : train_bgan_js(in.train_table, tcfg);
        art.input = in.summary_input ? "summary" : "raw";
        art.table_hash = io::hash_hex(table_identity(in));
        posterior = uniform_posterior(
            sample_posterior(art, x0, draws, derive_seed(tcfg.seed, 300)));
    } else {
        TrainConfig pilot_cfg = tcfg;
        GeneratorArtifact pilot = train_bgan(in.train_table, pilot_cfg);
        pilot.input = in.summary_input ? "summary" : "raw";
        pilot.table_hash = io::hash_hex(table_identity(in));
        pilot.save(res.dir + "/" + method + ".pilot.ckpt.json");

        TwoStepSections sections = refine_config_from(cfg, pilot_cfg);
        sections.two_step.draws = draws;
        sections.two_step.seed = tcfg.seed;
        sections.two_step.workers = workers;
        TwoStepResult two = refine_from_pilot(in.train_sim, x0, pilot, sections.two_step);
        if (method == "bgan-2s") {
            art = two.refined;
            posterior = two.posterior;
        } else {
            two.refined.save(res.dir + "/" + method + ".twostep.ckpt.json");
            AvbConfig acfg;
            acfg.train = sections.avb_train;
            acfg.train.standardize = sections.two_step.refine.standardize;
            acfg.table_rows = sections.avb_table_rows;
            acfg.draws = draws;
            acfg.weight_method = sections.avb_weight_method;
            acfg.seed = derive_seed(tcfg.seed, 600);
            acfg.workers = workers;
            AvbResult avb = run_avb(in.train_sim, x0, two.refined, acfg);
            art = avb.artifact;
            posterior = avb.posterior;
        }
    }

    res.checkpoint = res.dir + "/" + method + ".ckpt.json";
    res.samples = res.dir + "/" + method + ".samples.csv";
    res.losses = res.dir + "/" + method + ".loss.csv";
    art.save(res.checkpoint);
    posterior.save(res.samples);
    art.save_losses_csv(res.losses);
    res.seconds = now_seconds() - t0;

    nlohmann::json meta;
    meta["method"] = method;
    meta["seed"] = tcfg.seed;
    meta["config_hash"] = io::hash_hex(cfg.canonical());
    meta["table"] = table_identity(in);
    meta["input"] = in.summary_input ? "summary" : "raw";
    meta["weight_method"] = posterior.method;
    meta["ess"] = posterior.ess();
    meta["seconds"] = res.seconds;
    io::write_file(res.dir + "/" + method + ".meta.json", meta.dump(2) + "\n");
    res.posterior = std::move(posterior);
    return res;
}

AbcResult cmd_abc(const std::string& method, const std::string& table_base,
                  const std::string& x0_path, double accept_fraction,
                  const std::string& out_dir) {
    if (method != "ss" && method != "w2")
        throw std::runtime_error("unknown abc method '" + method + "'; expected ss or w2");
    if (!(accept_fraction > 0.0 && accept_fraction <= 1.0))
        throw std::runtime_error("abc: q must lie in (0, 1]");
    const double t0 = now_seconds();
    const ReferenceTable table = load_table(table_base);
    const SimulatorModel& sim = simulator_by_name(table.meta.simulator);
    const Vector x0 = io::read_row_csv(x0_path);
    if (x0.size() != sim.d_x)
        throw std::runtime_error("abc: x0 length does not match the simulator");

    DistanceFn dist;
    if (method == "ss") {
        auto summary = sim.summary;
        dist = SummaryDistance::fit(table, summary);
    } else {
        dist = w2_distance_fn(w2_shape_for(sim.name));
    }
    Matrix accepted = rejection_abc(table, x0, dist, accept_fraction);

    AbcResult res;
    res.posterior = uniform_posterior(std::move(accepted));
    io::ensure_dir(out_dir);
    res.samples = out_dir + "/abc-" + method + ".samples.csv";
    res.posterior.save(res.samples);
    res.seconds = now_seconds() - t0;
    return res;
}

EvalOutput cmd_eval(const std::vector<std::string>& sample_files, const Vector& theta0,
                    const std::string& reference_file, const std::string& out_dir,
                    const std::vector<bool>& fold_abs) {
    require(!sample_files.empty(), "eval: no sample files");
    require(!theta0.empty(), "eval: theta0 is required");
    std::optional<Matrix> reference;
    if (!reference_file.empty()) {
        const WeightedPosterior ref = WeightedPosterior::load(reference_file);
        reference = ref.draws;
    }

    EvalOutput out;
    nlohmann::json all = nlohmann::json::array();
    std::vector<std::vector<std::string>> rows;
    for (const auto& file : sample_files) {
        WeightedPosterior wp = WeightedPosterior::load(file);
        require(wp.draws.cols() == theta0.size(), file + ": parameter count mismatch");
        const std::string name = std::filesystem::path(file).stem().stem().string();
        EvalReport report = posterior_summary(wp, theta0, fold_abs);
        report.method = name;
        if (reference) report.mmd_value = mmd(wp.draws, *reference);
        all.push_back(nlohmann::json::parse(report.to_json()));
        for (std::size_t j = 0; j < report.params.size(); ++j) {
            rows.push_back({name, "theta_" + std::to_string(j + 1),
                            io::format_double(report.params[j].bias),
                            io::format_double(report.params[j].ci_width),
                            std::to_string(report.params[j].coverage)});
        }
        out.reports.push_back(std::move(report));
    }

    io::ensure_dir(out_dir);
    out.report_json = out_dir + "/eval.report.json";
    io::write_file(out.report_json, all.dump(2) + "\n");
    out.comparison_csv = out_dir + "/eval.comparison.csv";
    std::string csv = "method,parameter,bias,ci_width,coverage\n";
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j) csv += ',';
            csv += r[j];
        }
        csv += '\n';
    }
    io::write_file(out.comparison_csv, csv);
    return out;
}

// --- reproduce ------------------------------------------------------------

Vector reproduce_theta0(const std::string& experiment) {
    if (experiment == "toy") return {-0.7, -2.9, -1.0, -0.9, 0.6};
    if (experiment == "lv") return {0.01, 0.5, 1.0, 0.01};
    if (experiment == "bnb") return {0.4, 50.0, 0.09, 0.05};
    throw std::runtime_error("unknown experiment '" + experiment +
                             "'; expected toy, lv or bnb");
}

std::string reproduce_recipe(const std::string& experiment, const std::string& scale) {
    if (scale != "desk" && scale != "paper")
        throw std::runtime_error("unknown scale '" + scale + "'; expected desk or paper");
    const bool desk = scale == "desk";
    if (experiment == "toy") {
        return desk ? R"([table]
simulator = gauss_toy
rows = 50000

[train]
batch_size = 3200
epochs = 300
steps_per_epoch = 1
n_critic = 15
lambda = 5
draws = 1000

[refine]
table_rows = 20000
epochs = 200
steps_per_epoch = 1

[avb]
table_rows = 20000
epochs = 200
steps_per_epoch = 1

[abc]
q = 0.01
)"
                    : R"([table]
simulator = gauss_toy
rows = 100000

[train]
batch_size = 6400
epochs = 1000
n_critic = 15
lambda = 5
draws = 1000

[refine]
table_rows = 50000
epochs = 1000

[avb]
table_rows = 50000
epochs = 1000

[abc]
q = 0.01
)";
    }
    if (experiment == "lv") {
        return desk ? R"([table]
simulator = lotka_volterra
rows = 100000

[train]
batch_size = 1280
epochs = 200
steps_per_epoch = 1
gen_hidden = 256,256,128
critic_hidden = 256,256,128
standardize = true
draws = 1000

[refine]
table_rows = 20000
epochs = 200
steps_per_epoch = 1
standardize = true

[avb]
table_rows = 20000
epochs = 200
steps_per_epoch = 1
standardize = true

[abc]
q = 0.01
)"
                    : R"([table]
simulator = lotka_volterra
rows = 1000000

[train]
batch_size = 12800
epochs = 1000
gen_hidden = 256,256,128
critic_hidden = 256,256,128
standardize = true
draws = 1000

[refine]
table_rows = 50000
epochs = 1000
standardize = true

[avb]
table_rows = 50000
epochs = 1000
standardize = true

[abc]
q = 0.01
)";
    }
    if (experiment == "bnb") {
        return desk ? R"([table]
simulator = boom_bust
rows = 100000

[train]
input = summary
batch_size = 3200
epochs = 300
steps_per_epoch = 1
draws = 1000

[refine]
table_rows = 20000
epochs = 200
steps_per_epoch = 1

[avb]
table_rows = 20000
epochs = 200
steps_per_epoch = 1

[abc]
q = 0.01
)"
                    : R"([table]
simulator = boom_bust
rows = 500000

[train]
input = summary
batch_size = 6400
epochs = 2000
draws = 1000

[refine]
table_rows = 50000
epochs = 1000

[avb]
table_rows = 50000
epochs = 1000

[abc]
q = 0.01
)";
    }
    throw std::runtime_error("unknown experiment '" + experiment + "'; expected toy, lv or bnb");
}

ReproduceResult cmd_reproduce(const std::string& experiment, const std::string& scale,
                              std::uint64_t seed, const std::string& out_root, int workers) {
    const std::string recipe = reproduce_recipe(experiment, scale);
    Config cfg = Config::parse(recipe, experiment + "-" + scale);
    const Vector theta0 = reproduce_theta0(experiment);
    const SimulatorModel& sim = simulator_by_name(cfg.get_string("table", "simulator"));

    ReproduceResult res;
    res.dir = run_dir(out_root, cfg, seed, "reproduce-" + experiment + "-" + scale);
    io::write_file(res.dir + "/config.ini", recipe);

    auto timed = [&res](const std::string& name, auto&& fn) {
        const double t0 = now_seconds();
        fn();
        res.timings.emplace_back(name, now_seconds() - t0);
    };

    // Observed data from theta0 under a dedicated stream.
    const std::string x0_path = res.dir + "/x0.csv";
    {
        RngStream rng(derive_seed(seed, 999), 0);
        const SimResult obs = sim.simulate(theta0, rng);
        io::write_row_csv(x0_path, obs.x);
    }

    std::string table_base;
    timed("table", [&] {
        const ReferenceTable table = generate_table(
            sim, static_cast<std::size_t>(cfg.get_long("table", "rows")),
            derive_seed(seed, 1), workers);
        table_base = res.dir + "/table";
        save_table(table, table_base);
    });

    std::vector<std::string> sample_files;
    for (const std::string method : {"bgan", "bgan-js", "bgan-2s", "bgan-vb"}) {
        timed(method, [&] {
            TrainResult tr = cmd_train(method, cfg, x0_path, res.dir, derive_seed(seed, 2),
                                       workers, table_base);
            // Keep every artifact inside the reproduce directory.
            for (const std::string suffix :
                 {".ckpt.json", ".samples.csv", ".loss.csv", ".meta.json", ".pilot.ckpt.json",
                  ".twostep.ckpt.json"}) {
                const std::string src = tr.dir + "/" + method + suffix;
                if (std::filesystem::exists(src))
                    std::filesystem::rename(src, res.dir + "/" + method + suffix);
            }
            std::filesystem::remove_all(tr.dir);
            sample_files.push_back(res.dir + "/" + method + ".samples.csv");
        });
    }

    const double q = cfg.get_double("abc", "q", 0.01);
    for (const std::string method : {"ss", "w2"}) {
        timed("abc-" + method, [&] {
            AbcResult ar = cmd_abc(method, table_base, x0_path, q, res.dir);
            sample_files.push_back(ar.samples);
        });
    }

    std::string reference_file;
    if (experiment == "toy") {
        timed("oracle", [&] {
            const Vector x0 = io::read_row_csv(x0_path);
            const Matrix oracle = true_posterior_toy(x0, 1000, derive_seed(seed, 3));
            WeightedPosterior wp = uniform_posterior(oracle, "oracle");
            reference_file = res.dir + "/oracle.samples.csv";
            wp.save(reference_file);
        });
    }

    timed("eval", [&] {
        std::vector<bool> fold;
        if (experiment == "toy") fold = {false, false, true, true, false};
        cmd_eval(sample_files, theta0, reference_file, res.dir, fold);
    });

    nlohmann::json timings = nlohmann::json::array();
    for (const auto& [name, secs] : res.timings) timings.push_back({{"stage", name}, {"seconds", secs}});
    io::write_file(res.dir + "/timings.json", timings.dump(2) + "\n");
    return res;
}

}  // namespace bgan::pipeline
