#include "psc/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "psc/rng.hpp"
#include "psc/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace psc {

ArchSpec ExperimentConfig::arch() const {
    ArchSpec a;
    a.input_dim = dataset.dim;
    a.hidden_dims = hidden_dims;
    a.class_count = dataset.class_count;
    a.activation = activation;
    return a;
}

void ExperimentConfig::validate() const {
    arch().validate();
    train.validate();
    if (selection.k < 1) throw std::invalid_argument("ExperimentConfig: k must be >= 1");
    if (selection.poison_classes_per_target < 1 ||
        selection.poison_classes_per_target >= dataset.class_count)
        throw std::invalid_argument("ExperimentConfig: poison_classes_per_target out of range");
    if (wc_count < 1 || wc_count > train.inits)
        throw std::invalid_argument("ExperimentConfig: wc_count must be in [1, inits]");
    if (alpha <= 0.0) throw std::invalid_argument("ExperimentConfig: alpha must be positive");
}

namespace {

json config_to_json(const ExperimentConfig& c) {
    return json{
        {"schema_version", c.schema_version},
        {"dataset",
         {{"classes", c.dataset.class_count},
          {"per_class_train", c.dataset.per_class_train},
          {"per_class_test", c.dataset.per_class_test},
          {"dim", c.dataset.dim},
          {"spread", c.dataset.spread},
          {"seed", c.dataset.seed}}},
        {"arch",
         {{"hidden_dims", c.hidden_dims},
          {"activation", c.activation == Activation::relu ? "relu" : "tanh"}}},
        {"train",
         {{"epochs", c.train.epochs},
          {"batch_size", c.train.batch_size},
          {"learning_rate", c.train.learning_rate},
          {"momentum", c.train.momentum},
          {"inits", c.train.inits},
          {"base_seed", c.train.base_seed}}},
        {"attack",
         {{"epsilon", c.attack.epsilon},
          {"linf_bound", c.attack.linf_bound},
          {"craft_steps", c.attack.craft_steps},
          {"craft_lr", c.attack.craft_lr},
          {"trials", c.attack.trials}}},
        {"selection",
         {{"k", c.selection.k},
          {"per_class", c.selection.per_class},
          {"poison_classes_per_target", c.selection.poison_classes_per_target}}},
        {"wc_count", c.wc_count},
        {"alpha", c.alpha},
        {"threads", c.threads},
        {"output_dir", c.output_dir}};
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    c.schema_version = j.at("schema_version").get<int>();
    if (c.schema_version != 1)
        throw std::runtime_error("config: unsupported schema_version");
    const auto& d = j.at("dataset");
    c.dataset.class_count = d.at("classes").get<int>();
    c.dataset.per_class_train = d.at("per_class_train").get<int>();
    c.dataset.per_class_test = d.at("per_class_test").get<int>();
    c.dataset.dim = d.at("dim").get<int>();
    c.dataset.spread = d.at("spread").get<double>();
    c.dataset.seed = d.at("seed").get<uint64_t>();
    const auto& a = j.at("arch");
    c.hidden_dims = a.at("hidden_dims").get<std::vector<int>>();
    const std::string act = a.at("activation").get<std::string>();
    if (act == "relu")
        c.activation = Activation::relu;
    else if (act == "tanh")
        c.activation = Activation::tanh;
    else
        throw std::runtime_error("config: unknown activation " + act);
    const auto& t = j.at("train");
    c.train.epochs = t.at("epochs").get<int>();
    c.train.batch_size = t.at("batch_size").get<int>();
    c.train.learning_rate = t.at("learning_rate").get<double>();
    c.train.momentum = t.at("momentum").get<double>();
    c.train.inits = t.at("inits").get<int>();
    c.train.base_seed = t.at("base_seed").get<uint64_t>();
    const auto& k = j.at("attack");
    c.attack.epsilon = k.at("epsilon").get<double>();
    c.attack.linf_bound = k.at("linf_bound").get<double>();
    c.attack.craft_steps = k.at("craft_steps").get<int>();
    c.attack.craft_lr = k.at("craft_lr").get<double>();
    c.attack.trials = k.at("trials").get<int>();
    const auto& s = j.at("selection");
    c.selection.k = s.at("k").get<int>();
    c.selection.per_class = s.at("per_class").get<bool>();
    c.selection.poison_classes_per_target = s.at("poison_classes_per_target").get<int>();
    c.wc_count = j.at("wc_count").get<int>();
    c.alpha = j.at("alpha").get<double>();
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    return c;
}

json metrics_to_json(const MetricReport& m) {
    json j{{"epa_pred", m.epa_pred},
           {"epa_conf", m.epa_conf},
           {"ppa", m.ppa},
           {"final_conf_yt", m.final_conf_yt},
           {"final_conf_yp", m.final_conf_yp},
           {"prescreened_count", m.prescreened_count},
           {"unreachable_count", m.unreachable_count},
           {"w_p_checkpoint", m.w_p_checkpoint}};
    j["delta"] = m.delta ? json(*m.delta) : json(nullptr);
    j["tau"] = m.tau ? json(*m.tau) : json(nullptr);
    return j;
}

MetricReport metrics_from_json(const json& j) {
    MetricReport m;
    m.epa_pred = j.at("epa_pred").get<double>();
    m.epa_conf = j.at("epa_conf").get<double>();
    m.ppa = j.at("ppa").get<double>();
    m.final_conf_yt = j.at("final_conf_yt").get<double>();
    m.final_conf_yp = j.at("final_conf_yp").get<double>();
    m.prescreened_count = j.at("prescreened_count").get<int>();
    m.unreachable_count = j.at("unreachable_count").get<int>();
    m.w_p_checkpoint = j.at("w_p_checkpoint").get<std::string>();
    if (!j.at("delta").is_null()) m.delta = j.at("delta").get<double>();
    if (!j.at("tau").is_null()) m.tau = j.at("tau").get<double>();
    return m;
}

json record_to_json(const StudyRecord& r) {
    json trials = json::array();
    for (const auto& t : r.outcome.trials)
        trials.push_back({{"success", t.success},
                          {"final_cosine", t.final_cosine},
                          {"clean_acc", t.clean_acc},
                          {"poisoned_acc", t.poisoned_acc}});
    return json{{"target",
                 {{"sample_id", r.target.sample_id},
                  {"y_t", r.target.true_class},
                  {"y_p", r.target.poison_class}}},
                {"group", r.low_epa_group ? "low_epa" : "high_epa"},
                {"status", r.status},
                {"metrics", metrics_to_json(r.metrics)},
                {"attack",
                 {{"asr", r.outcome.asr},
                  {"mean_acc_drop", r.outcome.mean_acc_drop},
                  {"trials", trials}}}};
}

StudyRecord record_from_json(const json& j) {
    StudyRecord r;
    const auto& t = j.at("target");
    r.target.sample_id = t.at("sample_id").get<size_t>();
    r.target.true_class = t.at("y_t").get<int>();
    r.target.poison_class = t.at("y_p").get<int>();
    r.low_epa_group = j.at("group").get<std::string>() == "low_epa";
    r.status = j.at("status").get<std::string>();
    r.metrics = metrics_from_json(j.at("metrics"));
    const auto& a = j.at("attack");
    r.outcome.asr = a.at("asr").get<double>();
    r.outcome.mean_acc_drop = a.at("mean_acc_drop").get<double>();
    for (const auto& tj : a.at("trials")) {
        TrialOutcome to;
        to.success = tj.at("success").get<bool>();
        to.final_cosine = tj.at("final_cosine").get<double>();
        to.clean_acc = tj.at("clean_acc").get<double>();
        to.poisoned_acc = tj.at("poisoned_acc").get<double>();
        r.outcome.trials.push_back(to);
    }
    return r;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("config: parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

void save_experiment_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("config: cannot write " + path);
    f << config_to_json(cfg).dump(2) << "\n";
}

std::string config_hash(const ExperimentConfig& cfg) {
    json j = config_to_json(cfg);
    j.erase("threads");
    j.erase("output_dir");
    const std::string s = j.dump();
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

StudyContext prepare_study(const ExperimentConfig& cfg) {
    cfg.validate();
    StudyContext ctx;
    ctx.cfg = cfg;
    ctx.data = gen_gaussian_classes(cfg.dataset);

    const ArchSpec arch = cfg.arch();
    std::vector<size_t> watch(ctx.data.test.size());
    std::iota(watch.begin(), watch.end(), size_t{0});

    // clean sweep: the watch set is evaluated against the test split, so
    // training runs on the train split but traces are recorded on test rows
    ctx.trace.class_count = arch.class_count;
    ctx.trace.epochs = cfg.train.epochs;
    ctx.trace.watch_ids = watch;

    // the trace loop watches test samples; train_clean watches indices into
    // its own dataset, so we track the test split separately below
    const int nthreads = cfg.threads > 0
                             ? cfg.threads
                             : std::max(1u, std::thread::hardware_concurrency());
    ctx.trace.slices.resize(cfg.train.inits);
    std::vector<ModelParams> finals(cfg.train.inits);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    auto worker = [&]() {
        for (int m = next.fetch_add(1); m < cfg.train.inits; m = next.fetch_add(1)) {
            auto run = train_clean_watch(cfg.train, arch, ctx.data.train, ctx.data.test, watch, m);
            ctx.trace.slices[m] = std::move(run.trace);
            finals[m] = std::move(run.params);
        }
    };
    for (int i = 0; i < std::min(nthreads, cfg.train.inits); ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    ctx.trace.validate();

    double acc_sum = 0.0;
    for (const auto& p : finals) acc_sum += accuracy(p, ctx.data.test);
    ctx.clean_test_acc = acc_sum / cfg.train.inits;

    ctx.wc_list.assign(finals.begin(), finals.begin() + cfg.wc_count);

    // EPA over the whole test set
    ctx.epa_all.resize(ctx.data.test.size());
    for (size_t id = 0; id < ctx.data.test.size(); ++id)
        ctx.epa_all[id] = epa_prediction(ctx.trace, id, ctx.data.test.labels[id]);

    // high / low EPA target groups; ties broken by lowest sample id
    auto select_group = [&](const std::vector<size_t>& ids, bool low, int k) {
        std::vector<size_t> order = ids;
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            if (ctx.epa_all[a] != ctx.epa_all[b])
                return low ? ctx.epa_all[a] < ctx.epa_all[b] : ctx.epa_all[a] > ctx.epa_all[b];
            return a < b;
        });
        if (static_cast<size_t>(k) < order.size()) order.resize(static_cast<size_t>(k));
        return order;
    };

    std::vector<std::pair<size_t, bool>> targets;  // (sample_id, low_group)
    auto add_targets = [&](const std::vector<size_t>& ids) {
        for (size_t id : select_group(ids, false, cfg.selection.k)) targets.emplace_back(id, false);
        for (size_t id : select_group(ids, true, cfg.selection.k)) targets.emplace_back(id, true);
    };
    if (cfg.selection.per_class) {
        for (int c = 0; c < arch.class_count; ++c) {
            std::vector<size_t> ids;
            for (size_t id = 0; id < ctx.data.test.size(); ++id)
                if (ctx.data.test.labels[id] == c) ids.push_back(id);
            add_targets(ids);
        }
    } else {
        std::vector<size_t> ids(ctx.data.test.size());
        std::iota(ids.begin(), ids.end(), size_t{0});
        add_targets(ids);
    }

    // pre-screen: a (x_t, y_p) pair is out if any trial's final epoch already
    // predicts y_p; surviving candidates are ranked by the final-epoch
    // confidence of y_p and the most promising ones get attacked
    auto final_predicts = [&](size_t id, int y_p) {
        const size_t w = ctx.trace.watch_pos(id);
        for (const auto& s : ctx.trace.slices)
            if (s.pred_at(ctx.trace.epochs - 1, w) == y_p) return true;
        return false;
    };

    for (const auto& [id, low] : targets) {
        const int y_t = ctx.data.test.labels[id];
        std::vector<std::pair<double, int>> survivors;  // (-conf, y_p)
        for (int y_p = 0; y_p < arch.class_count; ++y_p) {
            if (y_p == y_t) continue;
            TargetSpec t{id, y_t, y_p};
            if (final_predicts(id, y_p)) {
                ctx.pairs.push_back({t, low, true});
            } else {
                survivors.emplace_back(-final_confidence_baseline(ctx.trace, id, y_p), y_p);
            }
        }
        std::sort(survivors.begin(), survivors.end());
        const int take = std::min<int>(cfg.selection.poison_classes_per_target,
                                      static_cast<int>(survivors.size()));
        for (int i = 0; i < take; ++i)
            ctx.pairs.push_back({TargetSpec{id, y_t, survivors[static_cast<size_t>(i)].second}, low, false});
    }
    return ctx;
}

std::vector<StudyRecord> run_attacks(const StudyContext& ctx,
                                     std::optional<double> epsilon_override,
                                     const std::string& records_dir) {
    const auto& cfg = ctx.cfg;
    AttackConfig acfg = cfg.attack;
    if (epsilon_override) acfg.epsilon = *epsilon_override;
    acfg.validate(ctx.data.train.size());

    if (!records_dir.empty()) fs::create_directories(records_dir);
    auto record_path = [&](const PlannedPair& p) {
        return records_dir + "/rec_" + std::to_string(p.target.sample_id) + "_" +
               std::to_string(p.target.poison_class) + ".json";
    };

    auto process = [&](const PlannedPair& p) {
        StudyRecord rec;
        rec.target = p.target;
        rec.low_epa_group = p.low_epa_group;
        try {
            rec.metrics = metric_report(ctx.trace, ctx.wc_list, ctx.data.train, ctx.data.test,
                                        p.target, cfg.alpha);
            if (p.prescreened) {
                rec.status = "prescreened";
            } else {
                const uint64_t seed =
                    derive_seed(derive_seed(cfg.train.base_seed, 0x41545441ULL),
                                p.target.sample_id * static_cast<uint64_t>(ctx.data.train.class_count) +
                                    static_cast<uint64_t>(p.target.poison_class));
                rec.outcome = evaluate_attack(cfg.train, acfg, cfg.arch(), ctx.data.train,
                                              ctx.data.test, p.target, seed);
                rec.status = "attacked";
            }
        } catch (const std::exception&) {
            rec.status = "failed";
        }
        return rec;
    };

    std::vector<StudyRecord> out(ctx.pairs.size());
    const int nthreads = cfg.threads > 0
                             ? cfg.threads
                             : std::max(1u, std::thread::hardware_concurrency());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (size_t i = next.fetch_add(1); i < ctx.pairs.size(); i = next.fetch_add(1)) {
            const auto& p = ctx.pairs[i];
            if (!records_dir.empty() && fs::exists(record_path(p))) {
                std::ifstream f(record_path(p));
                json j;
                f >> j;
                out[i] = record_from_json(j);
                continue;
            }
            out[i] = process(p);
            if (!records_dir.empty()) {
                const std::string tmp = record_path(p) + ".tmp";
                std::ofstream f(tmp);
                f << record_to_json(out[i]).dump() << "\n";
                f.close();
                fs::rename(tmp, record_path(p));
            }
        }
    };
    std::vector<std::thread> pool;
    const size_t want = std::min<size_t>(static_cast<size_t>(nthreads), ctx.pairs.size());
    for (size_t i = 0; i < want; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return out;
}

StudySummary summarize(const std::vector<StudyRecord>& records, double clean_test_acc) {
    StudySummary s;
    s.clean_test_acc = clean_test_acc;
    std::vector<double> epa, asr, delta_hi, tau_hi, asr_hi;
    double drop_sum = 0.0;
    int drop_n = 0;
    for (const auto& r : records) {
        GroupStats& g = r.low_epa_group ? s.low_epa : s.high_epa;
        if (r.status == "prescreened") {
            ++g.prescreened;
        } else if (r.status == "failed") {
            ++g.failed;
        } else {
            ++g.attacked;
            g.mean_asr += r.outcome.asr;
            epa.push_back(r.metrics.epa_pred);
            asr.push_back(r.outcome.asr);
            drop_sum += r.outcome.mean_acc_drop;
            ++drop_n;
            if (!r.low_epa_group && r.metrics.delta && r.metrics.tau) {
                delta_hi.push_back(*r.metrics.delta);
                tau_hi.push_back(*r.metrics.tau);
                asr_hi.push_back(r.outcome.asr);
            }
        }
    }
    if (s.low_epa.attacked > 0) s.low_epa.mean_asr /= s.low_epa.attacked;
    if (s.high_epa.attacked > 0) s.high_epa.mean_asr /= s.high_epa.attacked;
    if (epa.size() >= 3) s.spearman_epa_asr = spearman(epa, asr);
    if (delta_hi.size() >= 3) {
        s.spearman_delta_asr = spearman(delta_hi, asr_hi);
        s.spearman_tau_asr = spearman(tau_hi, asr_hi);
    }
    if (drop_n > 0) s.mean_acc_drop = drop_sum / drop_n;
    return s;
}

void write_study_records(const std::vector<StudyRecord>& records, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_study_records: cannot open " + path);
    for (const auto& r : records) f << record_to_json(r).dump() << "\n";
}

std::vector<StudyRecord> load_study_records(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_study_records: cannot open " + path);
    std::vector<StudyRecord> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        out.push_back(record_from_json(json::parse(line)));
    }
    return out;
}

void write_summary(const StudySummary& s, const std::string& path) {
    auto group = [](const GroupStats& g) {
        return json{{"attacked", g.attacked},
                    {"prescreened", g.prescreened},
                    {"failed", g.failed},
                    {"mean_asr", g.mean_asr}};
    };
    json j{{"low_epa", group(s.low_epa)},
           {"high_epa", group(s.high_epa)},
           {"mean_acc_drop", s.mean_acc_drop},
           {"clean_test_acc", s.clean_test_acc}};
    j["spearman_epa_asr"] = s.spearman_epa_asr ? json(*s.spearman_epa_asr) : json(nullptr);
    j["spearman_delta_asr"] = s.spearman_delta_asr ? json(*s.spearman_delta_asr) : json(nullptr);
    j["spearman_tau_asr"] = s.spearman_tau_asr ? json(*s.spearman_tau_asr) : json(nullptr);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_summary: cannot open " + path);
    f << j.dump(2) << "\n";
}

StudyResult run_study(const ExperimentConfig& cfg) {
    cfg.validate();
    StudyResult res;
    res.run_dir = cfg.output_dir + "/" + config_hash(cfg);
    fs::create_directories(res.run_dir);
    save_experiment_config(cfg, res.run_dir + "/config.json");

    StudyContext ctx = prepare_study(cfg);

    // provenance manifest for the generated dataset
    {
        json m{{"generator", "gaussian_classes"},
               {"classes", cfg.dataset.class_count},
               {"per_class_train", cfg.dataset.per_class_train},
               {"per_class_test", cfg.dataset.per_class_test},
               {"dim", cfg.dataset.dim},
               {"spread", cfg.dataset.spread},
               {"seed", cfg.dataset.seed},
               {"config_hash", config_hash(cfg)}};
        std::ofstream f(res.run_dir + "/manifest.json");
        f << m.dump(2) << "\n";
    }
    {
        const std::string trace_path = res.run_dir + "/trace.jsonl";
        std::ofstream(trace_path, std::ios::trunc);
        for (const auto& slice : ctx.trace.slices)
            append_trace_slice(slice, ctx.trace.class_count, trace_path);
    }
    for (size_t i = 0; i < ctx.wc_list.size(); ++i)
        save_checkpoint(ctx.wc_list[i], res.run_dir + "/wc_" + std::to_string(i) + ".ckpt");

    res.records = run_attacks(ctx, std::nullopt, res.run_dir + "/records");
    std::stable_sort(res.records.begin(), res.records.end(),
                     [](const StudyRecord& a, const StudyRecord& b) {
                         if (a.target.sample_id != b.target.sample_id)
                             return a.target.sample_id < b.target.sample_id;
                         return a.target.poison_class < b.target.poison_class;
                     });
    write_study_records(res.records, res.run_dir + "/study.jsonl");
    res.summary = summarize(res.records, ctx.clean_test_acc);
    write_summary(res.summary, res.run_dir + "/summary.json");
    return res;
}

void report_tiers(const std::vector<StudyRecord>& records, const std::string& metric_key,
                  int tiers, const std::string& csv_path) {
    std::vector<double> metric, asr;
    for (const auto& r : records) {
        if (r.status != "attacked") continue;
        if (metric_key == "epa") {
            metric.push_back(r.metrics.epa_pred);
        } else if (metric_key == "delta") {
            if (!r.metrics.delta) continue;
            metric.push_back(*r.metrics.delta);
        } else if (metric_key == "tau") {
            if (!r.metrics.tau) continue;
            metric.push_back(*r.metrics.tau);
        } else {
            throw std::invalid_argument("report_tiers: unknown metric " + metric_key);
        }
        asr.push_back(r.outcome.asr);
    }
    const auto means = tier_analysis(metric, asr, tiers);
    std::ofstream f(csv_path);
    if (!f) throw std::runtime_error("report_tiers: cannot open " + csv_path);
    f << "tier,mean_asr\n";
    for (size_t i = 0; i < means.size(); ++i) f << i << ',' << means[i] << "\n";
}

void report_pairwise_delta(const std::vector<StudyRecord>& records, int trials,
                           const std::string& csv_path) {
    // per target: enumerate poison-class pairs, order each by ASR, bucket by
    // the ASR gap on the 1/R grid and average the delta difference
    std::map<size_t, std::vector<const StudyRecord*>> by_target;
    for (const auto& r : records)
        if (r.status == "attacked" && r.metrics.delta) by_target[r.target.sample_id].push_back(&r);

    std::map<int, std::pair<double, int>> buckets;  // gap_in_grid_units -> (sum, n)
    for (const auto& [id, recs] : by_target) {
        for (size_t i = 0; i < recs.size(); ++i) {
            for (size_t j = i + 1; j < recs.size(); ++j) {
                const StudyRecord* hi = recs[i];
                const StudyRecord* lo = recs[j];
                if (hi->outcome.asr < lo->outcome.asr) std::swap(hi, lo);
                const int gap =
                    static_cast<int>(std::lround((hi->outcome.asr - lo->outcome.asr) * trials));
                auto& b = buckets[gap];
                b.first += *hi->metrics.delta - *lo->metrics.delta;
                b.second += 1;
            }
        }
    }
    std::ofstream f(csv_path);
    if (!f) throw std::runtime_error("report_pairwise_delta: cannot open " + csv_path);
    f << "asr_gap,mean_delta_diff,pairs\n";
    for (const auto& [gap, b] : buckets)
        f << static_cast<double>(gap) / trials << ',' << b.first / b.second << ',' << b.second << "\n";
}

void report_asr_histogram(const std::vector<StudyRecord>& records, int bins,
                          const std::string& path_stem) {
    std::vector<double> asr;
    for (const auto& r : records)
        if (r.status == "attacked") asr.push_back(r.outcome.asr);
    emit_histogram(asr, bins, path_stem);
}

}  // namespace psc
