#pragma once

#include "slidereg/prng.hpp"
#include "slidereg/scoring.hpp"

namespace slidereg {

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
};

namespace bootstrap_detail {

// replicate r draws from its own stream, so results are independent of
// execution order and thread count
inline std::vector<size_t> resample_indices(size_t n, std::uint64_t seed, std::uint64_t replicate) {
    PrngStream rng(seed, stream::bootstrap_base + replicate);
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = rng.uniform_int(std::uint32_t(n));
    return idx;
}

} // namespace bootstrap_detail

// Percentile bootstrap (2.5th / 97.5th) with pair-level resampling for the
// pair-aggregated statistics and landmark-level resampling for the pooled
// median/mean.
inline ConfidenceInterval bootstrap_ci(const std::vector<PairScore>& scores,
                                       const std::vector<double>& pooled_tres, MetricId metric,
                                       int n_boot = 10000, std::uint64_t seed = 0) {
    require(n_boot >= 1, errc::argument, "bootstrap needs >= 1 replicate");
    require(!scores.empty() && !pooled_tres.empty(), errc::argument,
            "bootstrap needs non-empty scores");

    bool pooled_metric = metric == MetricId::median_all || metric == MetricId::mean_all;
    std::vector<double> stat(size_t(n_boot));

    if (pooled_metric) {
        size_t n = pooled_tres.size();
        for (int r = 0; r < n_boot; ++r) {
            auto idx = bootstrap_detail::resample_indices(n, seed, std::uint64_t(r));
            std::vector<double> sample(n);
            for (size_t i = 0; i < n; ++i) sample[i] = pooled_tres[idx[i]];
            if (metric == MetricId::median_all) {
                stat[size_t(r)] = percentile(std::move(sample), 50.0);
            } else {
                stat[size_t(r)] =
                    std::accumulate(sample.begin(), sample.end(), 0.0) / double(sample.size());
            }
        }
    } else {
        size_t n = scores.size();
        for (int r = 0; r < n_boot; ++r) {
            auto idx = bootstrap_detail::resample_indices(n, seed, std::uint64_t(r));
            std::vector<double> p90s;
            p90s.reserve(n);
            double red_sum = 0.0;
            size_t red_n = 0;
            for (size_t i = 0; i < n; ++i) {
                const PairScore& s = scores[idx[i]];
                p90s.push_back(s.p90_um);
                if (s.reduction_defined) {
                    red_sum += s.reduction_pct;
                    ++red_n;
                }
            }
            switch (metric) {
                case MetricId::median90: stat[size_t(r)] = percentile(std::move(p90s), 50.0); break;
                case MetricId::p90of90: stat[size_t(r)] = percentile(std::move(p90s), 90.0); break;
                case MetricId::mean90:
                    stat[size_t(r)] =
                        std::accumulate(p90s.begin(), p90s.end(), 0.0) / double(p90s.size());
                    break;
                case MetricId::reduction:
                    stat[size_t(r)] = red_n ? red_sum / double(red_n)
                                            : std::numeric_limits<double>::quiet_NaN();
                    break;
                default: break;
            }
        }
    }
    return {percentile(stat, 2.5), percentile(stat, 97.5)};
}

} // namespace slidereg
