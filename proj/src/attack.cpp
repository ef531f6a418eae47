#include "psc/attack.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "psc/rng.hpp"

namespace psc {

void AttackConfig::validate(size_t train_size) const {
    if (epsilon <= 0.0 || epsilon >= 1.0) throw std::invalid_argument("AttackConfig: epsilon in (0,1)");
    if (static_cast<size_t>(epsilon * train_size) < 1)
        throw std::invalid_argument("AttackConfig: budget floor(epsilon*|D_tr|) must be >= 1");
    if (linf_bound <= 0.0) throw std::invalid_argument("AttackConfig: linf_bound must be positive");
    if (craft_steps < 0) throw std::invalid_argument("AttackConfig: craft_steps must be >= 0");
    if (craft_lr <= 0.0) throw std::invalid_argument("AttackConfig: craft_lr must be positive");
    if (trials < 1) throw std::invalid_argument("AttackConfig: trials must be >= 1");
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    const double denom = std::sqrt(aa) * std::sqrt(bb);
    return denom > 0.0 ? ab / denom : 0.0;
}

}  // namespace

CraftResult craft_poison_gm(const ModelParams& w_c, const Dataset& clean,
                            std::span<const double> x_t, int y_p, const AttackConfig& cfg) {
    cfg.validate(clean.size());
    const size_t budget = static_cast<size_t>(cfg.epsilon * static_cast<double>(clean.size()));
    const auto base = select_base_samples(clean, y_p, budget);
    const int dim = clean.dim;

    const auto g_star = per_sample_grad(w_c, {x_t, y_p});

    CraftResult res;
    res.poison.base_indices = base;
    res.poison.dim = dim;
    res.poison.linf_bound = cfg.linf_bound;
    res.poison.deltas.assign(budget * dim, 0.0);

    std::vector<double> xbuf(dim);
    auto poisoned_grad = [&](size_t k, const std::vector<double>& deltas) {
        const auto row = clean.row(base[k]);
        for (int j = 0; j < dim; ++j) xbuf[static_cast<size_t>(j)] = row[static_cast<size_t>(j)] + deltas[k * dim + j];
        return per_sample_grad(w_c, {xbuf, y_p});
    };

    auto sum_grad = [&](const std::vector<double>& deltas) {
        std::vector<double> sum(w_c.theta.size(), 0.0);
        for (size_t k = 0; k < budget; ++k) {
            const auto g = poisoned_grad(k, deltas);
            if (!std::isfinite(g[0]))
                throw std::runtime_error("craft_poison_gm: non-finite crafting gradient");
            for (size_t j = 0; j < sum.size(); ++j) sum[j] += g[j];
        }
        return sum;
    };

    auto sum0 = sum_grad(res.poison.deltas);
    res.initial_cosine = cosine(sum0, g_star);
    res.final_cosine = res.initial_cosine;
    if (cfg.craft_steps == 0) return res;

    // Sign-step projected ascent on cosine alignment. The derivative w.r.t.
    // each delta coordinate is a central difference that only touches the
    // owning sample's gradient within the sum.
    const double h = 1e-4;
    std::vector<double> deltas = res.poison.deltas;
    std::vector<double> best_deltas = deltas;
    double best_cos = res.initial_cosine;

    std::vector<double> step_dir(budget * static_cast<size_t>(dim), 0.0);
    for (int step = 0; step < cfg.craft_steps; ++step) {
        const auto sum = sum_grad(deltas);
        std::vector<double> sum_mod(sum.size());
        for (size_t k = 0; k < budget; ++k) {
            const auto gk = poisoned_grad(k, deltas);
            for (int j = 0; j < dim; ++j) {
                const size_t at = k * dim + j;
                const double saved = deltas[at];

                deltas[at] = saved + h;
                const auto gp = poisoned_grad(k, deltas);
                for (size_t q = 0; q < sum.size(); ++q) sum_mod[q] = sum[q] - gk[q] + gp[q];
                const double cp = cosine(sum_mod, g_star);

                deltas[at] = saved - h;
                const auto gm = poisoned_grad(k, deltas);
                for (size_t q = 0; q < sum.size(); ++q) sum_mod[q] = sum[q] - gk[q] + gm[q];
                const double cm = cosine(sum_mod, g_star);

                deltas[at] = saved;
                step_dir[at] = cp - cm;
            }
        }
        for (size_t at = 0; at < deltas.size(); ++at) {
            const double dir = step_dir[at] > 0.0 ? 1.0 : (step_dir[at] < 0.0 ? -1.0 : 0.0);
            deltas[at] += cfg.craft_lr * dir;
            deltas[at] = std::clamp(deltas[at], -cfg.linf_bound, cfg.linf_bound);
        }
        const double c = cosine(sum_grad(deltas), g_star);
        if (c > best_cos) {
            best_cos = c;
            best_deltas = deltas;
        }
    }

    res.poison.deltas = std::move(best_deltas);
    res.final_cosine = best_cos;
    res.poison.validate();
    return res;
}

AttackOutcome evaluate_attack(const TrainConfig& tcfg, const AttackConfig& acfg,
                              const ArchSpec& arch, const Dataset& clean, const Dataset& test,
                              const TargetSpec& t, uint64_t seed) {
    acfg.validate(clean.size());
    t.validate(clean.class_count);
    const auto x_t = test.row(t.sample_id);

    AttackOutcome out;
    size_t successes = 0;
    double drop_sum = 0.0;
    for (int r = 0; r < acfg.trials; ++r) {
        // crafting-time clean model uses a seed stream disjoint from the
        // evaluation retraining stream
        TrainConfig craft_cfg = tcfg;
        craft_cfg.base_seed = derive_seed(seed, 2 * static_cast<uint64_t>(r));
        const ModelParams w_c = train_poisoned(craft_cfg, arch, clean, PoisonSet{}, 0);

        const auto craft = craft_poison_gm(w_c, clean, x_t, t.poison_class, acfg);

        TrainConfig eval_cfg = tcfg;
        eval_cfg.base_seed = derive_seed(seed, 2 * static_cast<uint64_t>(r) + 1);
        const ModelParams w_trained = train_poisoned(eval_cfg, arch, clean, craft.poison, 0);

        TrialOutcome trial;
        trial.success = predict(w_trained, x_t) == t.poison_class;
        trial.final_cosine = craft.final_cosine;
        trial.clean_acc = accuracy(w_c, test);
        trial.poisoned_acc = accuracy(w_trained, test);
        if (trial.success) ++successes;
        drop_sum += trial.clean_acc - trial.poisoned_acc;
        out.trials.push_back(trial);
    }
    out.asr = static_cast<double>(successes) / acfg.trials;
    out.mean_acc_drop = drop_sum / acfg.trials;
    return out;
}

}  // namespace psc
