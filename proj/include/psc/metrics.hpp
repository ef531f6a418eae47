#pragma once

#include <optional>
#include <string>
#include <vector>

#include "psc/data.hpp"
#include "psc/model.hpp"
#include "psc/training.hpp"

namespace psc {

struct TargetSpec {
    size_t sample_id = 0;  // index into the watched/test set
    int true_class = 0;    // y_t
    int poison_class = 0;  // y_p

    void validate(int class_count) const;
};

// Trace-derived metrics. All averages over (init, epoch) pairs.
double epa_prediction(const TrainingTrace& trace, size_t sample_id, int y_t);
double epa_confidence(const TrainingTrace& trace, size_t sample_id, int y_t);
double ppa(const TrainingTrace& trace, size_t sample_id, int y_p);
// mean over inits of the final-epoch probability of the requested class
double final_confidence_baseline(const TrainingTrace& trace, size_t sample_id, int cls);

struct DeltaResult {
    bool already_poisoned = false;  // predict(w_c, x_t) == y_p before any step
    double delta = 0.0;
    ModelParams w_p;  // w_c - delta * g (equals w_c when already poisoned)
};

// One-step poisoning distance: the gradient g of the poison-class loss is
// taken once at w_c and never refreshed; the step size is bracketed by
// doubling from 0.5 and then bisected until u - l <= alpha. Returns u
// together with the proxy parameters w_p = w_c - u * g. The bracket is
// verified: predict(w_p, x_t) == y_p on return.
DeltaResult estimate_delta(const ModelParams& w_c, std::span<const double> x_t, int y_p,
                           double alpha = 1e-4);

// Budget lower bound: <w_p, g(D_cl; w_p)> / W(c - 1/e), clamped at zero.
// The clean-set gradient is evaluated at w_p, not w_c.
double compute_tau(const ModelParams& w_p, const Dataset& clean);

// the scalar half of the bound, exposed for its algebraic properties
double tau_from_inner(double inner_product, int class_count);

struct MetricReport {
    double epa_pred = 0.0;
    double epa_conf = 0.0;
    double ppa = 0.0;
    double final_conf_yt = 0.0;
    double final_conf_yp = 0.0;
    std::optional<double> delta;  // empty when every instance was pre-screened
    int prescreened_count = 0;
    int unreachable_count = 0;
    std::optional<double> tau;
    std::string w_p_checkpoint;  // optional path, filled by the harness
};

// Aggregates over the provided clean parameter sets: delta and tau are means
// over the non-pre-screened instances (tau evaluated at each instance's w_p
// proxy; a single instance's clamped bound is too noisy to rank with).
MetricReport metric_report(const TrainingTrace& trace, const std::vector<ModelParams>& w_c_list,
                           const Dataset& clean, const Dataset& test, const TargetSpec& t,
                           double alpha = 1e-4);

}  // namespace psc
