#include "refactor/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "refactor/errors.hpp"
#include "refactor/utf8.hpp"

namespace refactor::evalm {

std::int64_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<char32_t> sa = utf8::decode(a);
    std::vector<char32_t> sb = utf8::decode(b);
    if (sa.size() < sb.size()) std::swap(sa, sb);
    const std::size_t n = sb.size();
    std::vector<std::int64_t> prev(n + 1), cur(n + 1);
    std::iota(prev.begin(), prev.end(), std::int64_t{0});
    for (std::size_t i = 1; i <= sa.size(); ++i) {
        cur[0] = static_cast<std::int64_t>(i);
        for (std::size_t j = 1; j <= n; ++j) {
            std::int64_t sub = prev[j - 1] + (sa[i - 1] == sb[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

double similarity(std::string_view a, std::string_view b) {
    std::size_t la = utf8::count_scalars(a);
    std::size_t lb = utf8::count_scalars(b);
    std::size_t longest = std::max(la, lb);
    if (longest == 0) throw Error("similarity is undefined for two empty texts");
    return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

PairStats pair_stats(std::string_view a, std::string_view b) {
    PairStats s;
    s.distance = levenshtein(a, b);
    std::size_t longest = std::max(utf8::count_scalars(a), utf8::count_scalars(b));
    if (longest == 0) throw Error("similarity is undefined for two empty texts");
    s.similarity = 1.0 - static_cast<double>(s.distance) / static_cast<double>(longest);
    return s;
}

double pass_at_k(int n, int c, int k) {
    if (c < 0 || c > n) throw Error("pass@k requires 0 <= c <= n");
    if (k < 1 || k > n) throw Error("pass@k requires 1 <= k <= n");
    if (n - c < k) return 1.0;
    double fail = 1.0;
    for (int i = 0; i < k; ++i) {
        fail *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    }
    return 1.0 - fail;
}

double aggregate_pass_at_k(const std::vector<std::pair<int, int>>& records, int k) {
    if (records.empty()) throw Error("aggregate pass@k over an empty record list");
    double sum = 0;
    for (const auto& [n, c] : records) sum += pass_at_k(n, c, k);
    return sum / static_cast<double>(records.size());
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<std::pair<double, double>>& pairs) {
    std::vector<double> diffs;
    diffs.reserve(pairs.size());
    for (const auto& [before, after] : pairs) {
        double d = after - before;
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) throw Error("degenerate sample: all paired differences are zero");

    const std::size_t n = diffs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return std::fabs(diffs[i]) < std::fabs(diffs[j]);
    });

    // Average ranks over groups of tied absolute differences.
    std::vector<double> rank(n, 0.0);
    double tie_term = 0;  // sum of t^3 - t over tied groups
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && std::fabs(diffs[order[j]]) == std::fabs(diffs[order[i]])) ++j;
        double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t) rank[order[t]] = avg;
        double group = static_cast<double>(j - i);
        if (group > 1) tie_term += group * (group * group - 1.0);
        i = j;
    }

    WilcoxonResult res;
    res.n = static_cast<int>(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (diffs[t] > 0) {
            res.r_plus += rank[t];
        } else {
            res.r_minus += rank[t];
        }
    }
    res.statistic = std::min(res.r_plus, res.r_minus);

    double dn = static_cast<double>(n);
    double mn = dn * (dn + 1.0) / 4.0;
    double se_raw = dn * (dn + 1.0) * (2.0 * dn + 1.0) - 0.5 * tie_term;
    double se = std::sqrt(se_raw / 24.0);
    if (se == 0.0) throw Error("degenerate sample: zero variance in signed ranks");
    double dev = res.statistic - mn;
    double continuity = 0.5 * (dev > 0 ? 1.0 : (dev < 0 ? -1.0 : 0.0));
    double z = (dev - continuity) / se;
    res.p_value = std::erfc(std::fabs(z) / std::sqrt(2.0));
    if (res.p_value > 1.0) res.p_value = 1.0;
    return res;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw Error("pearson requires equally sized inputs");
    if (xs.size() < 2) throw Error("pearson requires at least 2 points");
    const double n = static_cast<double>(xs.size());
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx;
        double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error("pearson is undefined for zero variance");
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

}  // namespace refactor::evalm
