#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace psc {

enum class DatasetRole { clean_train, test };

struct Dataset {
    int dim = 0;
    int class_count = 0;
    DatasetRole role = DatasetRole::clean_train;
    std::vector<double> features;  // row-major, size() == rows * dim
    std::vector<int> labels;

    size_t size() const { return labels.size(); }
    std::span<const double> row(size_t i) const { return {features.data() + i * dim, static_cast<size_t>(dim)}; }
    std::span<double> row_mut(size_t i) { return {features.data() + i * dim, static_cast<size_t>(dim)}; }
    void validate() const;
};

struct PoisonSet {
    std::vector<size_t> base_indices;
    std::vector<double> deltas;  // row-major, one row of width dim per index
    int dim = 0;
    double linf_bound = 0.0;

    size_t size() const { return base_indices.size(); }
    void validate() const;  // distinct indices, |delta| <= bound
};

struct SyntheticSpec {
    int class_count = 5;
    int per_class_train = 500;
    int per_class_test = 100;
    int dim = 20;
    double spread = 1.0;  // isotropic noise std before standardization
    uint64_t seed = 1;
};

struct SyntheticData {
    Dataset train;
    Dataset test;
};

// Seeded Gaussian class clusters: means drawn on the unit sphere, isotropic
// noise `spread`; features standardized per coordinate using train statistics
// (the same affine map is applied to the test split).
SyntheticData gen_gaussian_classes(const SyntheticSpec& spec);

Dataset load_csv(const std::string& path);
void save_csv(const Dataset& data, const std::string& path);

// Replacing semantics: output keeps size and labels; listed rows get
// clean features + delta, everything else untouched.
Dataset apply_replacing_poison(const Dataset& clean, const PoisonSet& p);

// Deterministic base selection for crafting: the `count` lowest indices
// labeled y_p.
std::vector<size_t> select_base_samples(const Dataset& clean, int y_p, size_t count);

}  // namespace psc
