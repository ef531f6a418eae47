#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "psc/attack.hpp"
#include "psc/data.hpp"
#include "psc/metrics.hpp"
#include "psc/model.hpp"
#include "psc/stats.hpp"
#include "psc/study.hpp"
#include "psc/training.hpp"

namespace fs = std::filesystem;
using namespace psc;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<uint64_t> seed_override;
    std::optional<double> epsilon_override;
    std::optional<int> threads_override;
    std::optional<std::string> output_override;
};

ExperimentConfig resolve_config(const CommonOpts& o) {
    ExperimentConfig cfg = load_experiment_config(o.config_path);
    if (o.seed_override) cfg.train.base_seed = *o.seed_override;
    if (o.epsilon_override) cfg.attack.epsilon = *o.epsilon_override;
    if (o.threads_override) cfg.threads = *o.threads_override;
    if (o.output_override) cfg.output_dir = *o.output_override;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* app, CommonOpts& o) {
    app->add_option("-c,--config", o.config_path, "experiment config (JSON)")->required();
    app->add_option("--seed", o.seed_override, "override train.base_seed");
    app->add_option("--epsilon", o.epsilon_override, "override attack.epsilon");
    app->add_option("--threads", o.threads_override, "override worker thread count");
    app->add_option("--output", o.output_override, "override output directory");
}

std::string run_dir_for(const ExperimentConfig& cfg) {
    const std::string dir = cfg.output_dir + "/" + config_hash(cfg);
    fs::create_directories(dir);
    return dir;
}

int cmd_gen_data(const ExperimentConfig& cfg) {
    const auto dir = run_dir_for(cfg);
    const auto data = gen_gaussian_classes(cfg.dataset);
    save_csv(data.train, dir + "/train.csv");
    save_csv(data.test, dir + "/test.csv");
    nlohmann::json m{{"generator", "gaussian_classes"},
                     {"classes", cfg.dataset.class_count},
                     {"per_class_train", cfg.dataset.per_class_train},
                     {"per_class_test", cfg.dataset.per_class_test},
                     {"dim", cfg.dataset.dim},
                     {"spread", cfg.dataset.spread},
                     {"seed", cfg.dataset.seed},
                     {"config_hash", config_hash(cfg)}};
    std::ofstream(dir + "/manifest.json") << m.dump(2) << "\n";
    std::cout << "wrote " << dir << "/train.csv (" << data.train.size() << " rows), test.csv ("
              << data.test.size() << " rows)\n";
    return 0;
}

int cmd_train_clean(const ExperimentConfig& cfg) {
    const auto dir = run_dir_for(cfg);
    const auto ctx = prepare_study(cfg);
    const std::string trace_path = dir + "/trace.jsonl";
    std::ofstream(trace_path, std::ios::trunc);
    for (const auto& slice : ctx.trace.slices)
        append_trace_slice(slice, ctx.trace.class_count, trace_path);
    for (size_t i = 0; i < ctx.wc_list.size(); ++i)
        save_checkpoint(ctx.wc_list[i], dir + "/wc_" + std::to_string(i) + ".ckpt");
    std::cout << "trained " << cfg.train.inits << " clean inits, mean test accuracy "
              << ctx.clean_test_acc << "\n"
              << "trace: " << trace_path << "\n";
    return 0;
}

int cmd_epa(const ExperimentConfig& cfg, size_t sample_id) {
    const auto dir = run_dir_for(cfg);
    const auto test = load_csv(dir + "/test.csv");
    const auto trace = load_trace(dir + "/trace.jsonl", test.class_count);
    const int y_t = test.labels[sample_id];
    std::cout << "sample " << sample_id << " (y_t=" << y_t << ")\n"
              << "epa_pred " << epa_prediction(trace, sample_id, y_t) << "\n"
              << "epa_conf " << epa_confidence(trace, sample_id, y_t) << "\n"
              << "final_conf_yt " << final_confidence_baseline(trace, sample_id, y_t) << "\n";
    return 0;
}

int cmd_delta(const ExperimentConfig& cfg, size_t sample_id, int y_p) {
    const auto dir = run_dir_for(cfg);
    const auto test = load_csv(dir + "/test.csv");
    const auto w_c = load_checkpoint(dir + "/wc_0.ckpt");
    const auto dr = estimate_delta(w_c, test.row(sample_id), y_p, cfg.alpha);
    if (dr.already_poisoned) {
        std::cout << "already-poisoned (pre-screen case), delta = 0\n";
    } else {
        std::cout << "delta " << dr.delta << "\n";
        save_checkpoint(dr.w_p, dir + "/wp_" + std::to_string(sample_id) + "_" +
                                    std::to_string(y_p) + ".ckpt");
    }
    return 0;
}

int cmd_tau(const ExperimentConfig& cfg, size_t sample_id, int y_p) {
    const auto dir = run_dir_for(cfg);
    const auto train = load_csv(dir + "/train.csv");
    const auto test = load_csv(dir + "/test.csv");
    const auto w_c = load_checkpoint(dir + "/wc_0.ckpt");
    const auto dr = estimate_delta(w_c, test.row(sample_id), y_p, cfg.alpha);
    if (dr.already_poisoned) {
        std::cout << "already-poisoned (pre-screen case), tau undefined\n";
        return 0;
    }
    std::cout << "tau " << compute_tau(dr.w_p, train) << "\n";
    return 0;
}

int cmd_attack(const ExperimentConfig& cfg, size_t sample_id, int y_p) {
    const auto dir = run_dir_for(cfg);
    const auto data = gen_gaussian_classes(cfg.dataset);
    TargetSpec t{sample_id, data.test.labels[sample_id], y_p};
    const uint64_t seed = derive_seed(cfg.train.base_seed, sample_id * 256 + static_cast<uint64_t>(y_p));
    const auto out = evaluate_attack(cfg.train, cfg.attack, cfg.arch(), data.train, data.test, t, seed);
    std::ofstream log(dir + "/attack_" + std::to_string(sample_id) + "_" + std::to_string(y_p) +
                      ".jsonl");
    for (size_t r = 0; r < out.trials.size(); ++r) {
        nlohmann::json j{{"trial", r},
                         {"success", out.trials[r].success},
                         {"final_cosine", out.trials[r].final_cosine},
                         {"clean_acc_drop", out.trials[r].clean_acc - out.trials[r].poisoned_acc},
                         {"seed", seed}};
        log << j.dump() << "\n";
    }
    std::cout << "asr " << out.asr << " mean_acc_drop " << out.mean_acc_drop << "\n";
    return 0;
}

int cmd_study(const ExperimentConfig& cfg) {
    const auto res = run_study(cfg);
    std::cout << "run dir: " << res.run_dir << "\n"
              << "records: " << res.records.size() << "\n"
              << "mean ASR (low EPA):  " << res.summary.low_epa.mean_asr << "\n"
              << "mean ASR (high EPA): " << res.summary.high_epa.mean_asr << "\n";
    if (res.summary.spearman_epa_asr)
        std::cout << "spearman(EPA, ASR): " << *res.summary.spearman_epa_asr << "\n";
    return 0;
}

int cmd_report(const ExperimentConfig& cfg, int tiers, int bins) {
    const auto dir = run_dir_for(cfg);
    const auto records = load_study_records(dir + "/study.jsonl");
    for (const std::string key : {"epa", "delta", "tau"}) {
        try {
            report_tiers(records, key, tiers, dir + "/tiers_" + key + ".csv");
        } catch (const std::exception& e) {
            std::cerr << "tiers(" << key << ") skipped: " << e.what() << "\n";
        }
    }
    report_pairwise_delta(records, cfg.attack.trials, dir + "/pairwise_delta.csv");
    report_asr_histogram(records, bins, dir + "/asr_hist");
    const auto summary = summarize(records, 0.0);
    write_summary(summary, dir + "/summary_recomputed.json");
    std::cout << "reports written under " << dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"poisoning-difficulty toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    size_t sample_id = 0;
    int y_p = 0;
    int tiers = 5;
    int bins = 9;

    auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
    add_common(gen, opts);
    auto* tc = app.add_subcommand("train-clean", "clean-training sweep with trace recording");
    add_common(tc, opts);
    auto* epa = app.add_subcommand("epa", "trace metrics for one test sample");
    add_common(epa, opts);
    epa->add_option("--sample", sample_id, "test sample id")->required();
    auto* del = app.add_subcommand("delta", "poisoning distance for one (sample, y_p) pair");
    add_common(del, opts);
    del->add_option("--sample", sample_id)->required();
    del->add_option("--yp", y_p)->required();
    auto* tau = app.add_subcommand("tau", "budget lower bound for one (sample, y_p) pair");
    add_common(tau, opts);
    tau->add_option("--sample", sample_id)->required();
    tau->add_option("--yp", y_p)->required();
    auto* atk = app.add_subcommand("attack", "gradient-matching attack on one pair");
    add_common(atk, opts);
    atk->add_option("--sample", sample_id)->required();
    atk->add_option("--yp", y_p)->required();
    auto* study = app.add_subcommand("study", "full study pipeline");
    add_common(study, opts);
    auto* report = app.add_subcommand("report", "post-process a finished study");
    add_common(report, opts);
    report->add_option("--tiers", tiers, "tier count");
    report->add_option("--bins", bins, "histogram bins");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const ExperimentConfig cfg = resolve_config(opts);
        if (gen->parsed()) return cmd_gen_data(cfg);
        if (tc->parsed()) return cmd_train_clean(cfg);
        if (epa->parsed()) return cmd_epa(cfg, sample_id);
        if (del->parsed()) return cmd_delta(cfg, sample_id, y_p);
        if (tau->parsed()) return cmd_tau(cfg, sample_id, y_p);
        if (atk->parsed()) return cmd_attack(cfg, sample_id, y_p);
        if (study->parsed()) return cmd_study(cfg);
        if (report->parsed()) return cmd_report(cfg, tiers, bins);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
