#include "psc/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "psc/lambertw.hpp"

namespace psc {

void TargetSpec::validate(int class_count) const {
    if (true_class < 0 || true_class >= class_count || poison_class < 0 ||
        poison_class >= class_count)
        throw std::invalid_argument("TargetSpec: class out of range");
    if (poison_class == true_class)
        throw std::invalid_argument("TargetSpec: poison class must differ from true class");
}

namespace {

template <typename Fn>
double trace_average(const TrainingTrace& trace, size_t sample_id, Fn per_record) {
    const size_t w = trace.watch_pos(sample_id);
    double sum = 0.0;
    for (const auto& slice : trace.slices)
        for (int n = 0; n < trace.epochs; ++n) sum += per_record(slice, n, w);
    return sum / (static_cast<double>(trace.inits()) * trace.epochs);
}

}  // namespace

double epa_prediction(const TrainingTrace& trace, size_t sample_id, int y_t) {
    return trace_average(trace, sample_id, [&](const TraceSlice& s, int n, size_t w) {
        return s.pred_at(n, w) == y_t ? 1.0 : 0.0;
    });
}

double epa_confidence(const TrainingTrace& trace, size_t sample_id, int y_t) {
    return trace_average(trace, sample_id, [&](const TraceSlice& s, int n, size_t w) {
        return s.probs_at(n, w, trace.class_count)[y_t];
    });
}

double ppa(const TrainingTrace& trace, size_t sample_id, int y_p) {
    return trace_average(trace, sample_id, [&](const TraceSlice& s, int n, size_t w) {
        return s.pred_at(n, w) == y_p ? 1.0 : 0.0;
    });
}

double final_confidence_baseline(const TrainingTrace& trace, size_t sample_id, int cls) {
    const size_t w = trace.watch_pos(sample_id);
    double sum = 0.0;
    for (const auto& slice : trace.slices)
        sum += slice.probs_at(trace.epochs - 1, w, trace.class_count)[cls];
    return sum / trace.inits();
}

DeltaResult estimate_delta(const ModelParams& w_c, std::span<const double> x_t, int y_p,
                           double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("estimate_delta: alpha must be positive");
    DeltaResult res;
    if (predict(w_c, x_t) == y_p) {
        res.already_poisoned = true;
        res.w_p = w_c;
        return res;
    }

    const auto g = per_sample_grad(w_c, {x_t, y_p});

    ModelParams trial = w_c;
    auto predicts_yp = [&](double eta) {
        for (size_t i = 0; i < trial.theta.size(); ++i) trial.theta[i] = w_c.theta[i] - eta * g[i];
        return predict(trial, x_t) == y_p;
    };

    constexpr double kDoublingCap = 1099511627776.0;  // 2^40
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double mid = 0.5;
    while (hi - lo > alpha) {
        mid = std::isinf(hi) ? 2.0 * mid : 0.5 * (hi + lo);
        if (std::isinf(hi) && mid > kDoublingCap)
            throw std::runtime_error("estimate_delta: target unreachable along g");
        if (predicts_yp(mid))
            hi = mid;
        else
            lo = mid;
    }

    res.delta = hi;
    res.w_p = w_c;
    for (size_t i = 0; i < res.w_p.theta.size(); ++i) res.w_p.theta[i] -= hi * g[i];
    if (predict(res.w_p, x_t) != y_p)
        throw std::logic_error("estimate_delta: bracket verification failed");
    return res;
}

double tau_from_inner(double inner_product, int class_count) {
    if (class_count < 2) throw std::invalid_argument("tau: need at least 2 classes");
    if (inner_product <= 0.0) return 0.0;
    return inner_product / lambert_w0(class_count - 1.0 / M_E);
}

double compute_tau(const ModelParams& w_p, const Dataset& clean) {
    const int c = clean.class_count;
    if (c < 2) throw std::invalid_argument("compute_tau: need at least 2 classes");

    std::vector<double> mean_grad(w_p.theta.size(), 0.0);
    for (size_t i = 0; i < clean.size(); ++i) {
        const auto g = per_sample_grad(w_p, {clean.row(i), clean.labels[i]});
        for (size_t j = 0; j < mean_grad.size(); ++j) mean_grad[j] += g[j];
    }
    const double inv = 1.0 / static_cast<double>(clean.size());
    double inner = 0.0;
    for (size_t j = 0; j < mean_grad.size(); ++j) inner += w_p.theta[j] * mean_grad[j] * inv;
    return tau_from_inner(inner, c);
}

MetricReport metric_report(const TrainingTrace& trace, const std::vector<ModelParams>& w_c_list,
                           const Dataset& clean, const Dataset& test, const TargetSpec& t,
                           double alpha) {
    if (w_c_list.empty()) throw std::invalid_argument("metric_report: need at least one w_c");
    t.validate(clean.class_count);

    MetricReport rep;
    rep.epa_pred = epa_prediction(trace, t.sample_id, t.true_class);
    rep.epa_conf = epa_confidence(trace, t.sample_id, t.true_class);
    rep.ppa = ppa(trace, t.sample_id, t.poison_class);
    rep.final_conf_yt = final_confidence_baseline(trace, t.sample_id, t.true_class);
    rep.final_conf_yp = final_confidence_baseline(trace, t.sample_id, t.poison_class);

    const auto x_t = test.row(t.sample_id);
    double delta_sum = 0.0, tau_sum = 0.0;
    int delta_n = 0;
    for (const auto& w_c : w_c_list) {
        try {
            const auto dr = estimate_delta(w_c, x_t, t.poison_class, alpha);
            if (dr.already_poisoned) {
                ++rep.prescreened_count;
                continue;
            }
            delta_sum += dr.delta;
            tau_sum += compute_tau(dr.w_p, clean);
            ++delta_n;
        } catch (const std::runtime_error&) {
            ++rep.unreachable_count;
        }
    }
    if (delta_n > 0) {
        rep.delta = delta_sum / delta_n;
        rep.tau = tau_sum / delta_n;
    }
    return rep;
}

}  // namespace psc
