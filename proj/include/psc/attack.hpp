#pragma once

#include <cstdint>
#include <vector>

#include "psc/data.hpp"
#include "psc/metrics.hpp"
#include "psc/model.hpp"
#include "psc/training.hpp"

namespace psc {

struct AttackConfig {
    double epsilon = 0.02;     // poison fraction of |D_tr|
    double linf_bound = 0.5;   // in standardized feature units
    int craft_steps = 60;
    double craft_lr = 0.05;
    int trials = 8;  // R

    void validate(size_t train_size) const;
};

struct CraftResult {
    PoisonSet poison;
    double initial_cosine = 0.0;  // alignment of the unperturbed base samples
    double final_cosine = 0.0;
};

// Gradient matching: perturb floor(eps * |D_tr|) base samples of class y_p
// so that their mean training gradient aligns (cosine similarity) with the
// adversarial gradient g* = grad of the y_p loss at x_t. Projected ascent,
// clipping onto the l-inf ball after every step.
CraftResult craft_poison_gm(const ModelParams& w_c, const Dataset& clean,
                            std::span<const double> x_t, int y_p, const AttackConfig& cfg);

struct TrialOutcome {
    bool success = false;
    double final_cosine = 0.0;
    double clean_acc = 0.0;     // craft-model test accuracy (clean reference)
    double poisoned_acc = 0.0;  // retrained-on-poison test accuracy
};

struct AttackOutcome {
    std::vector<TrialOutcome> trials;
    double asr = 0.0;
    double mean_acc_drop = 0.0;
};

// R independent trials: craft against a clean model trained with a
// crafting-only seed, retrain from a fresh init on the poisoned set, count
// success when the retrained model predicts y_p on x_t.
AttackOutcome evaluate_attack(const TrainConfig& tcfg, const AttackConfig& acfg,
                              const ArchSpec& arch, const Dataset& clean, const Dataset& test,
                              const TargetSpec& t, uint64_t seed);

}  // namespace psc
