#include "psc/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "psc/rng.hpp"
#include "psc/softmax.hpp"

namespace psc {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("TrainConfig: momentum in [0,1)");
    if (inits < 1) throw std::invalid_argument("TrainConfig: inits must be >= 1");
}

size_t TrainingTrace::watch_pos(size_t sample_id) const {
    const auto it = std::find(watch_ids.begin(), watch_ids.end(), sample_id);
    if (it == watch_ids.end()) throw std::out_of_range("TrainingTrace: sample not watched");
    return static_cast<size_t>(it - watch_ids.begin());
}

void TrainingTrace::validate() const {
    for (const auto& s : slices) {
        if (s.watch_ids != watch_ids || s.epochs != epochs)
            throw std::invalid_argument("TrainingTrace: inconsistent slice shape");
        const size_t expect = static_cast<size_t>(epochs) * watch_ids.size();
        if (s.preds.size() != expect || s.probs.size() != expect * class_count)
            throw std::invalid_argument("TrainingTrace: slice has gaps");
        for (size_t r = 0; r < expect; ++r) {
            double sum = 0.0;
            for (int k = 0; k < class_count; ++k) sum += s.probs[r * class_count + k];
            if (std::fabs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("TrainingTrace: probabilities do not sum to 1");
        }
    }
}

namespace {

ModelParams run_sgd(const TrainConfig& cfg, const ArchSpec& arch, const Dataset& data,
                    const Dataset* watch_data, const std::vector<size_t>* watch, int init_index,
                    TraceSlice* trace_out) {
    cfg.validate();
    data.validate();
    if (arch.input_dim != data.dim || arch.class_count != data.class_count)
        throw std::invalid_argument("train: arch/dataset mismatch");

    Rng rng(derive_seed(cfg.base_seed, static_cast<uint64_t>(init_index)));
    ModelParams params = init_params(arch, rng);
    std::vector<double> velocity(params.theta.size(), 0.0);

    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t{0});

    if (trace_out) {
        trace_out->init_index = init_index;
        trace_out->epochs = cfg.epochs;
        trace_out->watch_ids = *watch;
        trace_out->preds.reserve(static_cast<size_t>(cfg.epochs) * watch->size());
        trace_out->probs.reserve(static_cast<size_t>(cfg.epochs) * watch->size() * arch.class_count);
    }

    std::vector<Sample> batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (size_t i = start; i < end; ++i)
                batch.push_back({data.row(order[i]), data.labels[order[i]]});
            const auto lg = loss_and_grad(params, batch);
            if (!std::isfinite(lg.loss))
                throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
            for (size_t i = 0; i < params.theta.size(); ++i) {
                velocity[i] = cfg.momentum * velocity[i] - cfg.learning_rate * lg.grad[i];
                params.theta[i] += velocity[i];
            }
        }
        if (trace_out) {
            for (size_t id : *watch) {
                const auto logits = forward(params, watch_data->row(id));
                const auto p = softmax(logits);
                trace_out->preds.push_back(argmax_lowest_tie(logits));
                trace_out->probs.insert(trace_out->probs.end(), p.begin(), p.end());
            }
        }
    }
    return params;
}

}  // namespace

CleanRun train_clean(const TrainConfig& cfg, const ArchSpec& arch, const Dataset& data,
                     const std::vector<size_t>& watch, int init_index) {
    return train_clean_watch(cfg, arch, data, data, watch, init_index);
}

CleanRun train_clean_watch(const TrainConfig& cfg, const ArchSpec& arch, const Dataset& data,
                           const Dataset& watch_data, const std::vector<size_t>& watch,
                           int init_index) {
    for (size_t id : watch)
        if (id >= watch_data.size()) throw std::out_of_range("train_clean: watch id out of range");
    if (watch_data.dim != data.dim)
        throw std::invalid_argument("train_clean: watch dataset dim mismatch");
    CleanRun run;
    run.params = run_sgd(cfg, arch, data, &watch_data, &watch, init_index, &run.trace);
    return run;
}

ModelParams train_poisoned(const TrainConfig& cfg, const ArchSpec& arch, const Dataset& clean,
                           const PoisonSet& poison, int init_index) {
    const Dataset poisoned =
        poison.size() == 0 ? clean : apply_replacing_poison(clean, poison);
    if (poisoned.size() != clean.size())
        throw std::logic_error("train_poisoned: replacing semantics violated");
    return run_sgd(cfg, arch, poisoned, nullptr, nullptr, init_index, nullptr);
}

double accuracy(const ModelParams& params, const Dataset& data) {
    size_t correct = 0;
    for (size_t i = 0; i < data.size(); ++i)
        if (predict(params, data.row(i)) == data.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

void append_trace_slice(const TraceSlice& slice, int class_count, const std::string& path) {
    std::ofstream f(path, std::ios::app);
    if (!f) throw std::runtime_error("append_trace_slice: cannot open " + path);
    for (int n = 0; n < slice.epochs; ++n) {
        for (size_t w = 0; w < slice.watch_ids.size(); ++w) {
            nlohmann::json rec;
            rec["m"] = slice.init_index;
            rec["n"] = n;
            rec["sample_id"] = slice.watch_ids[w];
            rec["pred"] = slice.pred_at(n, w);
            const double* p = slice.probs_at(n, w, class_count);
            rec["probs"] = std::vector<double>(p, p + class_count);
            f << rec.dump() << "\n";
        }
    }
}

TrainingTrace load_trace(const std::string& path, int class_count) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_trace: cannot open " + path);
    // gather records per init, then assemble dense slices
    struct Rec {
        int n;
        size_t sample_id;
        int pred;
        std::vector<double> probs;
    };
    std::map<int, std::vector<Rec>> per_init;
    std::string line;
    int max_epoch = -1;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        Rec r{j.at("n").get<int>(), j.at("sample_id").get<size_t>(), j.at("pred").get<int>(),
              j.at("probs").get<std::vector<double>>()};
        if (static_cast<int>(r.probs.size()) != class_count)
            throw std::runtime_error("load_trace: class count mismatch");
        max_epoch = std::max(max_epoch, r.n);
        per_init[j.at("m").get<int>()].push_back(std::move(r));
    }
    if (per_init.empty()) throw std::runtime_error("load_trace: no records in " + path);

    TrainingTrace trace;
    trace.class_count = class_count;
    trace.epochs = max_epoch + 1;
    // watch ids from epoch 0 of the first init, in record order
    for (const auto& r : per_init.begin()->second)
        if (r.n == 0) trace.watch_ids.push_back(r.sample_id);

    for (auto& [m, recs] : per_init) {
        TraceSlice s;
        s.init_index = m;
        s.epochs = trace.epochs;
        s.watch_ids = trace.watch_ids;
        const size_t nw = trace.watch_ids.size();
        s.preds.assign(static_cast<size_t>(trace.epochs) * nw, -1);
        s.probs.assign(static_cast<size_t>(trace.epochs) * nw * class_count, 0.0);
        for (const auto& r : recs) {
            const size_t w = trace.watch_pos(r.sample_id);
            const size_t at = static_cast<size_t>(r.n) * nw + w;
            s.preds[at] = r.pred;
            std::copy(r.probs.begin(), r.probs.end(), s.probs.begin() + at * class_count);
        }
        trace.slices.push_back(std::move(s));
    }
    trace.validate();
    return trace;
}

}  // namespace psc
