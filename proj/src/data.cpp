#include "psc/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "psc/rng.hpp"

namespace psc {

void Dataset::validate() const {
    if (dim < 1 || class_count < 2) throw std::invalid_argument("Dataset: bad dimensions");
    if (labels.empty()) throw std::invalid_argument("Dataset: empty");
    if (features.size() != labels.size() * static_cast<size_t>(dim))
        throw std::invalid_argument("Dataset: feature/label size mismatch");
    for (int y : labels)
        if (y < 0 || y >= class_count) throw std::invalid_argument("Dataset: label out of range");
    for (double v : features)
        if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite feature");
}

void PoisonSet::validate() const {
    if (linf_bound <= 0.0) throw std::invalid_argument("PoisonSet: linf_bound must be positive");
    if (deltas.size() != base_indices.size() * static_cast<size_t>(dim))
        throw std::invalid_argument("PoisonSet: delta shape mismatch");
    std::unordered_set<size_t> seen;
    for (size_t i : base_indices)
        if (!seen.insert(i).second) throw std::invalid_argument("PoisonSet: duplicate index");
    for (double d : deltas)
        if (!std::isfinite(d) || std::fabs(d) > linf_bound + 1e-15)
            throw std::invalid_argument("PoisonSet: delta violates linf bound");
}

SyntheticData gen_gaussian_classes(const SyntheticSpec& spec) {
    if (spec.class_count < 2 || spec.per_class_train < 1 || spec.per_class_test < 0 ||
        spec.dim < 1 || spec.spread <= 0.0)
        throw std::invalid_argument("gen_gaussian_classes: bad spec");

    Rng rng(spec.seed);

    // class means: seeded Gaussian directions normalized onto the unit sphere
    std::vector<std::vector<double>> means(spec.class_count, std::vector<double>(spec.dim));
    for (auto& mu : means) {
        double norm2 = 0.0;
        for (auto& v : mu) {
            v = rng.gaussian();
            norm2 += v * v;
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& v : mu) v *= inv;
    }

    auto fill = [&](Dataset& d, int per_class, DatasetRole role) {
        d.dim = spec.dim;
        d.class_count = spec.class_count;
        d.role = role;
        for (int c = 0; c < spec.class_count; ++c) {
            for (int i = 0; i < per_class; ++i) {
                d.labels.push_back(c);
                for (int j = 0; j < spec.dim; ++j)
                    d.features.push_back(means[c][j] + spec.spread * rng.gaussian());
            }
        }
    };

    SyntheticData out;
    fill(out.train, spec.per_class_train, DatasetRole::clean_train);
    fill(out.test, spec.per_class_test, DatasetRole::test);

    // standardize per coordinate from train statistics
    const size_t n = out.train.size();
    for (int j = 0; j < spec.dim; ++j) {
        double mean = 0.0;
        for (size_t i = 0; i < n; ++i) mean += out.train.features[i * spec.dim + j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double d = out.train.features[i * spec.dim + j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double inv_std = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
        for (size_t i = 0; i < n; ++i) {
            auto& v = out.train.features[i * spec.dim + j];
            v = (v - mean) * inv_std;
        }
        for (size_t i = 0; i < out.test.size(); ++i) {
            auto& v = out.test.features[i * spec.dim + j];
            v = (v - mean) * inv_std;
        }
    }
    return out;
}

Dataset load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("load_csv: empty file " + path);

    Dataset d;
    // header: "# dim=<d> classes=<c>"
    if (std::sscanf(line.c_str(), "# dim=%d classes=%d", &d.dim, &d.class_count) != 2)
        throw std::runtime_error("load_csv: bad header in " + path);
    if (d.dim < 1 || d.class_count < 2) throw std::runtime_error("load_csv: bad header values");

    size_t row_no = 1;
    while (std::getline(f, line)) {
        ++row_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<double> vals;
        while (std::getline(ss, field, ',')) {
            size_t pos = 0;
            double v;
            try {
                v = std::stod(field, &pos);
            } catch (const std::exception&) {
                throw std::runtime_error("load_csv: non-numeric field at row " + std::to_string(row_no));
            }
            while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) ++pos;
            if (pos != field.size())
                throw std::runtime_error("load_csv: non-numeric field at row " + std::to_string(row_no));
            vals.push_back(v);
        }
        if (vals.size() != static_cast<size_t>(d.dim) + 1)
            throw std::runtime_error("load_csv: wrong field count at row " + std::to_string(row_no));
        const double lab = vals[0];
        if (lab != std::floor(lab) || lab < 0 || lab >= d.class_count)
            throw std::runtime_error("load_csv: bad label at row " + std::to_string(row_no));
        d.labels.push_back(static_cast<int>(lab));
        d.features.insert(d.features.end(), vals.begin() + 1, vals.end());
    }
    d.validate();
    return d;
}

void save_csv(const Dataset& data, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_csv: cannot open " + path);
    f << "# dim=" << data.dim << " classes=" << data.class_count << "\n";
    char buf[32];
    for (size_t i = 0; i < data.size(); ++i) {
        f << data.labels[i];
        const auto r = data.row(i);
        for (double v : r) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            f << ',' << buf;
        }
        f << "\n";
    }
    if (!f) throw std::runtime_error("save_csv: write failed for " + path);
}

Dataset apply_replacing_poison(const Dataset& clean, const PoisonSet& p) {
    p.validate();
    if (p.dim != clean.dim) throw std::invalid_argument("apply_replacing_poison: dim mismatch");
    Dataset out = clean;
    for (size_t k = 0; k < p.size(); ++k) {
        const size_t idx = p.base_indices[k];
        if (idx >= clean.size()) throw std::out_of_range("apply_replacing_poison: index out of range");
        auto row = out.row_mut(idx);
        for (int j = 0; j < clean.dim; ++j) row[static_cast<size_t>(j)] += p.deltas[k * clean.dim + j];
    }
    return out;
}

std::vector<size_t> select_base_samples(const Dataset& clean, int y_p, size_t count) {
    if (y_p < 0 || y_p >= clean.class_count)
        throw std::invalid_argument("select_base_samples: bad class");
    std::vector<size_t> out;
    out.reserve(count);
    for (size_t i = 0; i < clean.size() && out.size() < count; ++i)
        if (clean.labels[i] == y_p) out.push_back(i);
    if (out.size() < count)
        throw std::runtime_error("select_base_samples: not enough samples of requested class");
    return out;
}

}  // namespace psc
