#include "psc/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "psc/softmax.hpp"

namespace psc {

void ArchSpec::validate() const {
    if (input_dim < 1) throw std::invalid_argument("ArchSpec: input_dim must be >= 1");
    if (class_count < 2) throw std::invalid_argument("ArchSpec: class_count must be >= 2");
    for (int h : hidden_dims)
        if (h < 1) throw std::invalid_argument("ArchSpec: hidden dims must be positive");
}

std::vector<int> ArchSpec::layer_sizes() const {
    std::vector<int> sizes;
    sizes.push_back(input_dim);
    sizes.insert(sizes.end(), hidden_dims.begin(), hidden_dims.end());
    sizes.push_back(class_count);
    return sizes;
}

size_t ArchSpec::param_count() const {
    const auto sizes = layer_sizes();
    size_t n = 0;
    for (size_t l = 0; l + 1 < sizes.size(); ++l)
        n += static_cast<size_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
    return n;
}

void ModelParams::validate() const {
    arch.validate();
    if (theta.size() != arch.param_count())
        throw std::invalid_argument("ModelParams: theta length does not match arch");
    for (double v : theta)
        if (!std::isfinite(v)) throw std::invalid_argument("ModelParams: non-finite parameter");
}

ModelParams init_params(const ArchSpec& arch, Rng& rng) {
    arch.validate();
    ModelParams p;
    p.arch = arch;
    p.theta.resize(arch.param_count());
    const auto sizes = arch.layer_sizes();
    size_t off = 0;
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        const double std_w = arch.activation == Activation::relu
                                 ? std::sqrt(2.0 / fan_in)
                                 : std::sqrt(1.0 / fan_in);
        for (int i = 0; i < fan_out * fan_in; ++i) p.theta[off++] = std_w * rng.gaussian();
        for (int i = 0; i < fan_out; ++i) p.theta[off++] = 0.0;  // biases start at zero
    }
    return p;
}

namespace {

double act(double z, Activation a) {
    return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

double act_deriv(double pre, double post, Activation a) {
    return a == Activation::relu ? (pre > 0.0 ? 1.0 : 0.0) : 1.0 - post * post;
}

// pre- and post-activation values for every layer; acts[0] is the input
struct ForwardPass {
    std::vector<std::vector<double>> pre;   // per non-input layer
    std::vector<std::vector<double>> acts;  // acts[0] = x, last = logits
};

ForwardPass run_forward(const ModelParams& params, std::span<const double> x) {
    const auto sizes = params.arch.layer_sizes();
    if (static_cast<int>(x.size()) != sizes[0])
        throw std::invalid_argument("forward: input dimension mismatch");
    ForwardPass fp;
    fp.acts.emplace_back(x.begin(), x.end());
    size_t off = 0;
    const size_t n_layers = sizes.size() - 1;
    for (size_t l = 0; l < n_layers; ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        std::vector<double> z(out);
        const double* w = params.theta.data() + off;
        const double* b = params.theta.data() + off + static_cast<size_t>(out) * in;
        const auto& a = fp.acts.back();
        for (int i = 0; i < out; ++i) {
            double s = b[i];
            const double* wi = w + static_cast<size_t>(i) * in;
            for (int j = 0; j < in; ++j) s += wi[j] * a[j];
            z[i] = s;
        }
        off += static_cast<size_t>(out) * in + out;
        fp.pre.push_back(z);
        if (l + 1 < n_layers)
            for (auto& zi : z) zi = act(zi, params.arch.activation);
        fp.acts.push_back(std::move(z));
    }
    return fp;
}

}  // namespace

std::vector<double> forward(const ModelParams& params, std::span<const double> x) {
    return run_forward(params, x).acts.back();
}

int argmax_lowest_tie(std::span<const double> v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[static_cast<size_t>(i)] > v[static_cast<size_t>(best)]) best = i;
    return best;
}

int predict(const ModelParams& params, std::span<const double> x) {
    const auto logits = forward(params, x);
    return argmax_lowest_tie(logits);
}

LossGrad per_sample_loss_grad(const ModelParams& params, const Sample& s) {
    const auto sizes = params.arch.layer_sizes();
    const auto fp = run_forward(params, s.x);
    auto ce = softmax_ce_grad(fp.acts.back(), s.label);

    LossGrad out;
    out.loss = ce.loss;
    out.grad.assign(params.theta.size(), 0.0);

    // layer offsets into theta
    const size_t n_layers = sizes.size() - 1;
    std::vector<size_t> offsets(n_layers);
    size_t off = 0;
    for (size_t l = 0; l < n_layers; ++l) {
        offsets[l] = off;
        off += static_cast<size_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
    }

    std::vector<double> delta = std::move(ce.grad_logits);  // d loss / d pre-activation
    for (size_t l = n_layers; l-- > 0;) {
        const int in = sizes[l], out_dim = sizes[l + 1];
        const auto& a = fp.acts[l];
        double* gw = out.grad.data() + offsets[l];
        double* gb = gw + static_cast<size_t>(out_dim) * in;
        for (int i = 0; i < out_dim; ++i) {
            const double d = delta[static_cast<size_t>(i)];
            double* gwi = gw + static_cast<size_t>(i) * in;
            for (int j = 0; j < in; ++j) gwi[j] = d * a[static_cast<size_t>(j)];
            gb[i] = d;
        }
        if (l == 0) break;
        const double* w = params.theta.data() + offsets[l];
        std::vector<double> prev(in, 0.0);
        for (int j = 0; j < in; ++j) {
            double s = 0.0;
            for (int i = 0; i < out_dim; ++i)
                s += w[static_cast<size_t>(i) * in + j] * delta[static_cast<size_t>(i)];
            const double dphi = act_deriv(fp.pre[l - 1][static_cast<size_t>(j)],
                                          fp.acts[l][static_cast<size_t>(j)],
                                          params.arch.activation);
            prev[static_cast<size_t>(j)] = s * dphi;
        }
        delta = std::move(prev);
    }
    return out;
}

std::vector<double> per_sample_grad(const ModelParams& params, const Sample& s) {
    return per_sample_loss_grad(params, s).grad;
}

LossGrad loss_and_grad(const ModelParams& params, const std::vector<Sample>& batch) {
    if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
    LossGrad acc;
    acc.loss = 0.0;
    acc.grad.assign(params.theta.size(), 0.0);
    for (const auto& s : batch) {
        const auto lg = per_sample_loss_grad(params, s);
        acc.loss += lg.loss;
        for (size_t i = 0; i < acc.grad.size(); ++i) acc.grad[i] += lg.grad[i];
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    acc.loss *= inv;
    for (auto& g : acc.grad) g *= inv;
    return acc;
}

namespace {

constexpr uint32_t kCheckpointMagic = 0x5053434dU;  // "PSCM"
constexpr uint32_t kCheckpointVersion = 1;

void write_u32(std::ofstream& f, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    f.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::ifstream& f) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

void write_f64(std::ofstream& f, double d) {
    uint64_t v;
    std::memcpy(&v, &d, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    f.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::ifstream& f) {
    unsigned char b[8];
    f.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    write_u32(f, kCheckpointMagic);
    write_u32(f, kCheckpointVersion);
    write_u32(f, static_cast<uint32_t>(params.arch.input_dim));
    write_u32(f, static_cast<uint32_t>(params.arch.hidden_dims.size()));
    for (int h : params.arch.hidden_dims) write_u32(f, static_cast<uint32_t>(h));
    write_u32(f, static_cast<uint32_t>(params.arch.class_count));
    write_u32(f, params.arch.activation == Activation::relu ? 0u : 1u);
    write_u32(f, static_cast<uint32_t>(params.theta.size()));
    for (double v : params.theta) write_f64(f, v);
    if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    if (read_u32(f) != kCheckpointMagic) throw std::runtime_error("load_checkpoint: bad magic");
    if (read_u32(f) != kCheckpointVersion) throw std::runtime_error("load_checkpoint: bad version");
    ModelParams p;
    p.arch.input_dim = static_cast<int>(read_u32(f));
    const uint32_t nh = read_u32(f);
    p.arch.hidden_dims.resize(nh);
    for (uint32_t i = 0; i < nh; ++i) p.arch.hidden_dims[i] = static_cast<int>(read_u32(f));
    p.arch.class_count = static_cast<int>(read_u32(f));
    p.arch.activation = read_u32(f) == 0 ? Activation::relu : Activation::tanh;
    const uint32_t n = read_u32(f);
    p.theta.resize(n);
    for (uint32_t i = 0; i < n; ++i) p.theta[i] = read_f64(f);
    if (!f) throw std::runtime_error("load_checkpoint: truncated file " + path);
    p.validate();
    return p;
}

}  // namespace psc
