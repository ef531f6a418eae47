#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psc/attack.hpp"
#include "psc/data.hpp"
#include "psc/metrics.hpp"
#include "psc/model.hpp"
#include "psc/training.hpp"

namespace psc {

struct SelectionRule {
    int k = 15;                         // targets per group (high / low EPA)
    bool per_class = false;             // apply k per target class instead of globally
    int poison_classes_per_target = 2;  // y_p candidates attacked per target
};

struct ExperimentConfig {
    int schema_version = 1;
    SyntheticSpec dataset;
    std::vector<int> hidden_dims{32};
    Activation activation = Activation::relu;
    TrainConfig train;
    AttackConfig attack;
    SelectionRule selection;
    int wc_count = 8;     // clean inits used for delta averaging
    double alpha = 1e-4;  // Algorithm precision for the delta search
    int threads = 0;      // 0 = hardware concurrency
    std::string output_dir = "runs";

    ArchSpec arch() const;
    void validate() const;
};

ExperimentConfig load_experiment_config(const std::string& path);
void save_experiment_config(const ExperimentConfig& cfg, const std::string& path);
// hash over everything that affects results (threads and output_dir excluded)
std::string config_hash(const ExperimentConfig& cfg);

struct PlannedPair {
    TargetSpec target;
    bool low_epa_group = false;
    bool prescreened = false;  // already predicted y_p at some trial's final epoch
};

struct StudyContext {
    ExperimentConfig cfg;
    SyntheticData data;
    TrainingTrace trace;
    std::vector<ModelParams> wc_list;
    std::vector<double> epa_all;  // EPA(prediction) per test sample
    double clean_test_acc = 0.0;  // mean final-model test accuracy over inits
    std::vector<PlannedPair> pairs;
};

// Clean-training sweep, EPA over the whole test set, target selection and
// pre-screening. Deterministic given the config.
StudyContext prepare_study(const ExperimentConfig& cfg);

struct StudyRecord {
    TargetSpec target;
    bool low_epa_group = false;
    std::string status;  // "attacked" | "prescreened" | "failed"
    MetricReport metrics;
    AttackOutcome outcome;  // empty for non-attacked records
};

// Metric reports and attack evaluation for every planned pair. When
// records_dir is nonempty, finished pairs are checkpointed there one file
// each and reused on resume. Pairs run in parallel across cfg.threads.
std::vector<StudyRecord> run_attacks(const StudyContext& ctx,
                                     std::optional<double> epsilon_override = std::nullopt,
                                     const std::string& records_dir = "");

struct GroupStats {
    int attacked = 0;
    int prescreened = 0;
    int failed = 0;
    double mean_asr = 0.0;
};

struct StudySummary {
    GroupStats low_epa;
    GroupStats high_epa;
    std::optional<double> spearman_epa_asr;     // over all attacked pairs
    std::optional<double> spearman_delta_asr;   // high-EPA group
    std::optional<double> spearman_tau_asr;     // high-EPA group
    double mean_acc_drop = 0.0;
    double clean_test_acc = 0.0;
};

StudySummary summarize(const std::vector<StudyRecord>& records, double clean_test_acc);

struct StudyResult {
    std::string run_dir;
    std::vector<StudyRecord> records;
    StudySummary summary;
};

// Full pipeline: run directory named by config hash under cfg.output_dir;
// emits config.json, trace.jsonl, checkpoints, study.jsonl and summary.json.
StudyResult run_study(const ExperimentConfig& cfg);

// (de)serialization of study records, one JSON object per line
void write_study_records(const std::vector<StudyRecord>& records, const std::string& path);
std::vector<StudyRecord> load_study_records(const std::string& path);
void write_summary(const StudySummary& s, const std::string& path);

// report modes over a finished study
void report_tiers(const std::vector<StudyRecord>& records, const std::string& metric_key,
                  int tiers, const std::string& csv_path);
void report_pairwise_delta(const std::vector<StudyRecord>& records, int trials,
                           const std::string& csv_path);
void report_asr_histogram(const std::vector<StudyRecord>& records, int bins,
                          const std::string& path_stem);

}  // namespace psc
