#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psc/rng.hpp"

namespace psc {

enum class Activation { relu, tanh };

struct ArchSpec {
    int input_dim = 1;
    std::vector<int> hidden_dims;  // empty = linear model
    int class_count = 2;
    Activation activation = Activation::relu;

    void validate() const;
    // layer sizes including input and output: [input_dim, hidden..., class_count]
    std::vector<int> layer_sizes() const;
    size_t param_count() const;
    bool operator==(const ArchSpec&) const = default;
};

// Flattening layout: layers in order; per layer the weight matrix
// (out x in, row-major) followed by the bias vector. The layout is fixed
// because delta, tau and the w_p proxy all operate on the flat vector.
struct ModelParams {
    ArchSpec arch;
    std::vector<double> theta;

    void validate() const;
};

ModelParams init_params(const ArchSpec& arch, Rng& rng);

std::vector<double> forward(const ModelParams& params, std::span<const double> x);
int predict(const ModelParams& params, std::span<const double> x);
int argmax_lowest_tie(std::span<const double> v);

struct Sample {
    std::span<const double> x;
    int label;
};

struct LossGrad {
    double loss;
    std::vector<double> grad;
};

LossGrad per_sample_loss_grad(const ModelParams& params, const Sample& s);
std::vector<double> per_sample_grad(const ModelParams& params, const Sample& s);
LossGrad loss_and_grad(const ModelParams& params, const std::vector<Sample>& batch);

// Checkpoint: small header (magic, format version, arch) + raw
// little-endian 64-bit float parameters. Round-trips bit-exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace psc
