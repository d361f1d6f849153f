#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "slidereg/errors.hpp"

namespace slidereg {

namespace stats_detail {

// average ranks, ties share the mean rank
inline std::vector<double> average_ranks(const std::vector<double>& values) {
    size_t n = values.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        double avg = (double(i + 1) + double(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline double upper_tail_normal(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// tie correction term sum of (t^3 - t) over tie groups
inline double tie_term(const std::vector<double>& values) {
    std::map<double, size_t> counts;
    for (double v : values) ++counts[v];
    double s = 0.0;
    for (const auto& [v, t] : counts) {
        (void)v;
        s += double(t) * double(t) * double(t) - double(t);
    }
    return s;
}

} // namespace stats_detail

// Paired two-sided Wilcoxon signed-rank test. Zero differences are dropped;
// ties get average ranks. Exact two-sided p by enumerating all 2^n sign
// assignments for n <= 12, normal approximation with tie and continuity
// corrections above. All-zero differences give p = 1.
inline double wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size() && !a.empty(), errc::argument,
            "wilcoxon needs equal-length non-empty samples");
    std::vector<double> mags;
    std::vector<int> signs;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        if (d == 0.0) continue;
        mags.push_back(std::abs(d));
        signs.push_back(d > 0 ? 1 : -1);
    }
    size_t n = mags.size();
    if (n == 0) return 1.0;

    std::vector<double> ranks = stats_detail::average_ranks(mags);
    double w_plus = 0.0, total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        total += ranks[i];
        if (signs[i] > 0) w_plus += ranks[i];
    }
    double center = total / 2.0;
    double dev = std::abs(w_plus - center);

    if (n <= 12) {
        size_t hits = 0, all = size_t(1) << n;
        for (size_t mask = 0; mask < all; ++mask) {
            double w = 0.0;
            for (size_t i = 0; i < n; ++i)
                if (mask & (size_t(1) << i)) w += ranks[i];
            if (std::abs(w - center) >= dev - 1e-12) ++hits;
        }
        return double(hits) / double(all);
    }

    double nn = double(n);
    double var = nn * (nn + 1) * (2 * nn + 1) / 24.0 - stats_detail::tie_term(mags) / 48.0;
    if (var <= 0.0) return 1.0;
    double z = (dev - 0.5) / std::sqrt(var); // continuity correction toward the center
    if (z < 0.0) z = 0.0;
    return std::min(1.0, 2.0 * stats_detail::upper_tail_normal(z));
}

// Two-sided Mann-Whitney U test on independent samples. For n_a + n_b <= 12
// the p-value is exact: every C(n, n_a) assignment of the pooled average
// ranks is enumerated (ties included). Larger samples use the normal
// approximation with tie and continuity corrections.
inline double mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
    require(!a.empty() && !b.empty(), errc::argument, "mann-whitney needs non-empty samples");
    size_t na = a.size(), nb = b.size(), n = na + nb;
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<double> ranks = stats_detail::average_ranks(pooled);

    double ra = 0.0;
    for (size_t i = 0; i < na; ++i) ra += ranks[i];
    double u_obs = ra - double(na) * double(na + 1) / 2.0;
    double mu = double(na) * double(nb) / 2.0;
    double dev = std::abs(u_obs - mu);

    if (n <= 12) {
        size_t hits = 0, cases = 0, all = size_t(1) << n;
        for (size_t mask = 0; mask < all; ++mask) {
            if (size_t(__builtin_popcountll(mask)) != na) continue;
            ++cases;
            double rsum = 0.0;
            for (size_t i = 0; i < n; ++i)
                if (mask & (size_t(1) << i)) rsum += ranks[i];
            double u = rsum - double(na) * double(na + 1) / 2.0;
            if (std::abs(u - mu) >= dev - 1e-12) ++hits;
        }
        return double(hits) / double(cases);
    }

    double nn = double(n);
    double var = double(na) * double(nb) / 12.0 *
                 ((nn + 1.0) - stats_detail::tie_term(pooled) / (nn * (nn - 1.0)));
    if (var <= 0.0) return 1.0;
    double z = (dev - 0.5) / std::sqrt(var);
    if (z < 0.0) z = 0.0;
    return std::min(1.0, 2.0 * stats_detail::upper_tail_normal(z));
}

// Benjamini-Hochberg step-up adjustment; input order preserved.
inline std::vector<double> bh_adjust(const std::vector<double>& pvals) {
    for (double p : pvals)
        require(p >= 0.0 && p <= 1.0, errc::argument, "p-values must lie in [0, 1]");
    size_t n = pvals.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t x, size_t y) { return pvals[x] < pvals[y]; });

    std::vector<double> adjusted(n, 0.0);
    double running_min = 1.0;
    for (size_t k = n; k-- > 0;) {
        double scaled = pvals[order[k]] * double(n) / double(k + 1);
        running_min = std::min(running_min, scaled);
        adjusted[order[k]] = std::min(running_min, 1.0);
    }
    return adjusted;
}

struct SpearmanResult {
    double rho = 0.0;
    bool degenerate = false; // constant input
};

// Pearson correlation of average ranks.
inline SpearmanResult spearman(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size() && a.size() >= 2, errc::argument,
            "spearman needs matched samples of length >= 2");
    std::vector<double> ra = stats_detail::average_ranks(a);
    std::vector<double> rb = stats_detail::average_ranks(b);
    double n = double(a.size());
    double ma = 0, mb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0, sbb = 0, sab = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
        sab += (ra[i] - ma) * (rb[i] - mb);
    }
    if (saa <= 1e-12 || sbb <= 1e-12) return {0.0, true};
    return {sab / std::sqrt(saa * sbb), false};
}

} // namespace slidereg
