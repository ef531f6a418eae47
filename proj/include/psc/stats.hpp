#pragma once

#include <optional>
#include <string>
#include <vector>

namespace psc {

// Spearman rank correlation with average ranks for ties. Returns nullopt
// when either input is constant (rank variance vanishes).
std::optional<double> spearman(const std::vector<double>& xs, const std::vector<double>& ys);

std::vector<double> average_ranks(const std::vector<double>& v);

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<size_t> counts;
};

Histogram make_histogram(const std::vector<double>& values, int bins);
// writes <path>.csv with (bin_lo, bin_hi, count) rows and <path>.svg bars
void emit_histogram(const std::vector<double>& values, int bins, const std::string& path_stem);

// Rank records by metric value (ascending), split into equal-size tiers with
// the remainder going to the early tiers; returns the mean outcome per tier.
std::vector<double> tier_analysis(const std::vector<double>& metric,
                                  const std::vector<double>& outcome, int tiers);

}  // namespace psc
