#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace psc {

// Stable softmax (max-subtraction). Output sums to 1 and is strictly positive.
inline std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (auto& pi : p) pi /= sum;
    return p;
}

struct CeResult {
    double loss;
    std::vector<double> grad_logits;  // softmax(logits) - onehot(label)
};

inline CeResult softmax_ce_grad(std::span<const double> logits, int label) {
    if (label < 0 || static_cast<size_t>(label) >= logits.size())
        throw std::out_of_range("softmax_ce_grad: label out of range");
    CeResult r;
    r.grad_logits = softmax(logits);
    r.loss = -std::log(r.grad_logits[static_cast<size_t>(label)]);
    r.grad_logits[static_cast<size_t>(label)] -= 1.0;
    return r;
}

}  // namespace psc
