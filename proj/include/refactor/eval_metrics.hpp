#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace refactor::evalm {

/// Minimum character edits (insert, delete, substitute at cost 1) between
/// two texts, computed over Unicode scalars.
std::int64_t levenshtein(std::string_view a, std::string_view b);

/// 1 - distance / max(|a|, |b|), in [0, 1]. Throws Error when both inputs
/// are empty (the ratio is undefined there).
double similarity(std::string_view a, std::string_view b);

struct PairStats {
    std::int64_t distance = 0;
    double similarity = 1;
};

/// Distance and similarity of a program pair in one pass.
PairStats pair_stats(std::string_view a, std::string_view b);

/// Unbiased pass@k estimator: 1 - C(n-c, k)/C(n, k) via a stable product.
/// Requires 0 <= c <= n and 1 <= k <= n.
double pass_at_k(int n, int c, int k);

/// Mean of pass_at_k over (n, c) records; empty input is an error.
double aggregate_pass_at_k(const std::vector<std::pair<int, int>>& records, int k);

struct WilcoxonResult {
    double statistic = 0;  // min(r_plus, r_minus), the two-sided test statistic
    double r_plus = 0;     // rank sum of positive (after - before) differences
    double r_minus = 0;
    double p_value = 1;
    int n = 0;  // pairs remaining after dropping zero differences
};

/// Two-sided Wilcoxon signed-rank test on (before, after) pairs using the
/// normal approximation with tie and continuity corrections; zero
/// differences are dropped. Throws Error when every difference is zero.
WilcoxonResult wilcoxon_signed_rank(const std::vector<std::pair<double, double>>& pairs);

/// Sample Pearson correlation; requires equal lengths >= 2 and nonzero
/// variance on both sides.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace refactor::evalm
