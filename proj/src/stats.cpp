#include "psc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace psc {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });

    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("spearman: length mismatch");
    if (xs.size() < 3) throw std::invalid_argument("spearman: need at least 3 points");
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);

    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

Histogram make_histogram(const std::vector<double>& values, int bins) {
    if (bins < 1) throw std::invalid_argument("make_histogram: bins must be >= 1");
    Histogram h;
    h.counts.assign(static_cast<size_t>(bins), 0);
    if (values.empty()) {
        h.lo = 0.0;
        h.hi = 1.0;
        return h;
    }
    h.lo = *std::min_element(values.begin(), values.end());
    h.hi = *std::max_element(values.begin(), values.end());
    if (h.hi == h.lo) h.hi = h.lo + 1.0;
    const double width = (h.hi - h.lo) / bins;
    for (double v : values) {
        int b = static_cast<int>((v - h.lo) / width);
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[static_cast<size_t>(b)];
    }
    return h;
}

void emit_histogram(const std::vector<double>& values, int bins, const std::string& path_stem) {
    const auto h = make_histogram(values, bins);
    const double width = (h.hi - h.lo) / bins;

    std::ofstream csv(path_stem + ".csv");
    if (!csv) throw std::runtime_error("emit_histogram: cannot open " + path_stem + ".csv");
    csv << "bin_lo,bin_hi,count\n";
    for (int b = 0; b < bins; ++b)
        csv << h.lo + b * width << ',' << h.lo + (b + 1) * width << ',' << h.counts[static_cast<size_t>(b)] << "\n";

    // simple bar chart
    const int W = 640, H = 400, margin = 40;
    const size_t max_count = std::max<size_t>(1, *std::max_element(h.counts.begin(), h.counts.end()));
    std::ofstream svg(path_stem + ".svg");
    if (!svg) throw std::runtime_error("emit_histogram: cannot open " + path_stem + ".svg");
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    const double bar_w = static_cast<double>(W - 2 * margin) / bins;
    for (int b = 0; b < bins; ++b) {
        const double frac = static_cast<double>(h.counts[static_cast<size_t>(b)]) / max_count;
        const double bh = frac * (H - 2 * margin);
        svg << "<rect x=\"" << margin + b * bar_w << "\" y=\"" << H - margin - bh << "\" width=\""
            << bar_w * 0.9 << "\" height=\"" << bh << "\" fill=\"steelblue\"/>\n";
    }
    svg << "<line x1=\"" << margin << "\" y1=\"" << H - margin << "\" x2=\"" << W - margin
        << "\" y2=\"" << H - margin << "\" stroke=\"black\"/>\n";
    svg << "</svg>\n";
}

std::vector<double> tier_analysis(const std::vector<double>& metric,
                                  const std::vector<double>& outcome, int tiers) {
    if (metric.size() != outcome.size()) throw std::invalid_argument("tier_analysis: length mismatch");
    if (tiers < 1) throw std::invalid_argument("tier_analysis: tiers must be >= 1");
    if (metric.size() < static_cast<size_t>(tiers))
        throw std::invalid_argument("tier_analysis: fewer records than tiers");

    std::vector<size_t> order(metric.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return metric[a] < metric[b]; });

    const size_t n = metric.size();
    const size_t base = n / tiers;
    const size_t rem = n % tiers;  // remainder spread over the early tiers
    std::vector<double> means;
    size_t at = 0;
    for (int t = 0; t < tiers; ++t) {
        const size_t sz = base + (static_cast<size_t>(t) < rem ? 1 : 0);
        double sum = 0.0;
        for (size_t k = 0; k < sz; ++k) sum += outcome[order[at + k]];
        means.push_back(sum / sz);
        at += sz;
    }
    return means;
}

}  // namespace psc
