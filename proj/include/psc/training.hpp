#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psc/data.hpp"
#include "psc/model.hpp"

namespace psc {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 0.05;
    double momentum = 0.9;
    int inits = 16;  // M
    uint64_t base_seed = 1;

    void validate() const;
};

// Per-init slice of the training trace: end-of-epoch prediction and class
// probabilities for every watched sample.
struct TraceSlice {
    int init_index = 0;
    int epochs = 0;
    std::vector<size_t> watch_ids;
    // preds[n * |watch| + w], probs[(n * |watch| + w) * c + k]
    std::vector<int> preds;
    std::vector<double> probs;

    int pred_at(int epoch, size_t watch_pos) const {
        return preds[static_cast<size_t>(epoch) * watch_ids.size() + watch_pos];
    }
    const double* probs_at(int epoch, size_t watch_pos, int class_count) const {
        return probs.data() + (static_cast<size_t>(epoch) * watch_ids.size() + watch_pos) * class_count;
    }
};

struct TrainingTrace {
    int class_count = 0;
    int epochs = 0;
    std::vector<size_t> watch_ids;
    std::vector<TraceSlice> slices;  // one per init, in init order

    int inits() const { return static_cast<int>(slices.size()); }
    size_t watch_pos(size_t sample_id) const;  // throws if not watched
    void validate() const;
};

struct CleanRun {
    ModelParams params;
    TraceSlice trace;
};

// One clean training run for init m: mini-batch SGD with momentum, per-epoch
// shuffle seeded from derive_seed(base_seed, m). The watch set is evaluated
// at the end of every epoch. Bit-reproducible given (cfg, data, m).
CleanRun train_clean(const TrainConfig& cfg, const ArchSpec& arch, const Dataset& data,
                     const std::vector<size_t>& watch, int init_index);

// same loop, but the watch ids refer to a separate evaluation dataset
// (typically the test split)
CleanRun train_clean_watch(const TrainConfig& cfg, const ArchSpec& arch, const Dataset& data,
                           const Dataset& watch_data, const std::vector<size_t>& watch,
                           int init_index);

ModelParams train_poisoned(const TrainConfig& cfg, const ArchSpec& arch, const Dataset& clean,
                           const PoisonSet& poison, int init_index);

double accuracy(const ModelParams& params, const Dataset& data);

// Line-delimited trace records {m, n, sample_id, pred, probs[c]}; appendable
// per trial.
void append_trace_slice(const TraceSlice& slice, int class_count, const std::string& path);
TrainingTrace load_trace(const std::string& path, int class_count);

}  // namespace psc
