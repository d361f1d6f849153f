#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "slidereg/landmarks.hpp"

namespace slidereg {

// Distance between the two annotators' target points, in microns.
inline double dba(const LandmarkRecord& r) { return distance(r.tgt1, r.tgt2) * r.mpp; }

// Target registration error: mean distance from the registered point to the
// two annotator targets, in microns.
inline double tre(Vec2 reg, const LandmarkRecord& r) {
    return 0.5 * (distance(reg, r.tgt1) + distance(reg, r.tgt2)) * r.mpp;
}

struct FilterResult {
    std::vector<LandmarkRecord> kept;
    std::vector<std::string> excluded_pairs; // too few landmarks after DBA filtering
};

// Challenge exclusion rules: drop records whose DBA strictly exceeds the
// threshold, then drop whole pairs left with fewer than min_per_pair records.
inline FilterResult filter_landmarks(const std::vector<LandmarkRecord>& records,
                                     double dba_threshold_um = 115.0, int min_per_pair = 10) {
    require(dba_threshold_um > 0 && min_per_pair > 0, errc::argument,
            "filter thresholds must be positive");
    std::map<std::string, size_t> kept_count;
    std::vector<LandmarkRecord> pass1;
    for (const auto& r : records) {
        if (dba(r) > dba_threshold_um) continue;
        ++kept_count[r.pair_id];
        pass1.push_back(r);
    }
    FilterResult out;
    std::set<std::string> excluded;
    for (const auto& [id, count] : kept_count)
        if (count < size_t(min_per_pair)) excluded.insert(id);
    for (const auto& r : records)
        if (dba(r) > dba_threshold_um && !kept_count.count(r.pair_id)) excluded.insert(r.pair_id);
    for (auto& r : pass1)
        if (!excluded.count(r.pair_id)) out.kept.push_back(std::move(r));
    out.excluded_pairs.assign(excluded.begin(), excluded.end());
    return out;
}

struct ResolvedSubmission {
    // registered point per kept truth record, parallel to the input order
    std::vector<Vec2> points;
    std::vector<std::string> warnings;
    size_t n_missing = 0;
};

// Present submission rows are used as-is; missing rows fall back to the
// unregistered source coordinates clamped to the image borders. Rows for
// unknown records warn and are ignored; duplicates are an error.
inline ResolvedSubmission resolve_submission(const std::vector<LandmarkRecord>& truth,
                                             const std::vector<SubmissionRecord>& submission,
                                             const std::map<std::string, PairDims>& dims) {
    std::map<std::pair<std::string, std::string>, Vec2> provided;
    std::set<std::pair<std::string, std::string>> seen;
    std::set<std::pair<std::string, std::string>> known;
    for (const auto& r : truth) known.emplace(r.pair_id, r.point_id);

    ResolvedSubmission out;
    for (const auto& s : submission) {
        auto key = std::make_pair(s.pair_id, s.point_id);
        if (!seen.insert(key).second)
            fail(errc::schema, "duplicate submission row for (" + s.pair_id + ", " + s.point_id + ")");
        if (!known.count(key)) {
            out.warnings.push_back("ignoring submission row for unknown (" + s.pair_id + ", " +
                                   s.point_id + ")");
            continue;
        }
        if (s.reg) provided.emplace(key, *s.reg);
    }

    out.points.reserve(truth.size());
    for (const auto& r : truth) {
        auto it = provided.find(std::make_pair(r.pair_id, r.point_id));
        if (it != provided.end()) {
            out.points.push_back(it->second);
            continue;
        }
        auto d = dims.find(r.pair_id);
        if (d == dims.end()) fail(errc::schema, "no dims entry for pair '" + r.pair_id + "'");
        ++out.n_missing;
        out.points.push_back({std::clamp(r.src.x, 0.0, double(d->second.width - 1)),
                              std::clamp(r.src.y, 0.0, double(d->second.height - 1))});
    }
    return out;
}

// Linear interpolation between order statistics: rank 1 + (p/100)(n-1) on the
// sorted values.
inline double percentile(std::vector<double> values, double p) {
    require(!values.empty(), errc::argument, "percentile of an empty list");
    require(p >= 0.0 && p <= 100.0, errc::argument, "percentile level must be in [0, 100]");
    std::sort(values.begin(), values.end());
    double rank = (p / 100.0) * double(values.size() - 1);
    size_t lo = size_t(std::floor(rank));
    size_t hi = size_t(std::ceil(rank));
    double frac = rank - double(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

struct PairScore {
    std::string pair_id;
    size_t n_included = 0;
    double p90_um = 0.0;
    double mean_before_um = 0.0;
    double mean_after_um = 0.0;
    double reduction_pct = 0.0;
    bool reduction_defined = true; // false when mean_before is zero
};

// Per-pair aggregation: the robustness-weighted 90th-percentile TRE plus the
// before/after means behind the distance-reduction column. "Before" scores
// the border-clamped unregistered source coordinates.
inline PairScore pair_score(const std::vector<LandmarkRecord>& records,
                            const std::vector<Vec2>& registered, const PairDims& dims,
                            double score_percentile = 90.0) {
    require(!records.empty() && records.size() == registered.size(), errc::argument,
            "pair_score needs matching non-empty records and points");
    PairScore s;
    s.pair_id = records.front().pair_id;
    s.n_included = records.size();
    std::vector<double> tres, before;
    tres.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        tres.push_back(tre(registered[i], records[i]));
        Vec2 clamped{std::clamp(records[i].src.x, 0.0, double(dims.width - 1)),
                     std::clamp(records[i].src.y, 0.0, double(dims.height - 1))};
        before.push_back(tre(clamped, records[i]));
    }
    s.p90_um = percentile(tres, score_percentile);
    s.mean_after_um = std::accumulate(tres.begin(), tres.end(), 0.0) / double(tres.size());
    s.mean_before_um = std::accumulate(before.begin(), before.end(), 0.0) / double(before.size());
    if (s.mean_before_um > 0.0) {
        s.reduction_pct = 100.0 * (1.0 - s.mean_after_um / s.mean_before_um);
    } else {
        s.reduction_defined = false;
        s.reduction_pct = std::numeric_limits<double>::quiet_NaN();
    }
    return s;
}

enum class MetricId { median90, p90of90, mean90, median_all, mean_all, reduction };

inline const char* metric_name(MetricId m) {
    switch (m) {
        case MetricId::median90: return "median90_um";
        case MetricId::p90of90: return "p90of90_um";
        case MetricId::mean90: return "mean90_um";
        case MetricId::median_all: return "median_all_um";
        case MetricId::mean_all: return "mean_all_um";
        case MetricId::reduction: return "reduction_pct";
    }
    return "?";
}

inline constexpr MetricId all_metrics[] = {MetricId::median90,   MetricId::p90of90,
                                           MetricId::mean90,     MetricId::median_all,
                                           MetricId::mean_all,   MetricId::reduction};

struct MetricSet {
    double median90_um = 0.0;
    double p90of90_um = 0.0;
    double mean90_um = 0.0;
    double median_all_um = 0.0;
    double mean_all_um = 0.0;
    double reduction_pct = 0.0;
    bool reduction_defined = true;

    double get(MetricId m) const {
        switch (m) {
            case MetricId::median90: return median90_um;
            case MetricId::p90of90: return p90of90_um;
            case MetricId::mean90: return mean90_um;
            case MetricId::median_all: return median_all_um;
            case MetricId::mean_all: return mean_all_um;
            case MetricId::reduction: return reduction_pct;
        }
        return 0.0;
    }
};

// Pair-aggregated statistics over the per-pair p90s, pooled statistics over
// the raw landmark TREs, and the slide-wise mean distance reduction.
inline MetricSet aggregate(const std::vector<PairScore>& scores,
                           const std::vector<double>& pooled_tres) {
    require(!scores.empty(), errc::empty_eval, "no scored pairs to aggregate");
    std::vector<double> p90s;
    p90s.reserve(scores.size());
    double red_sum = 0.0;
    size_t red_n = 0;
    for (const auto& s : scores) {
        p90s.push_back(s.p90_um);
        if (s.reduction_defined) {
            red_sum += s.reduction_pct;
            ++red_n;
        }
    }
    MetricSet m;
    m.median90_um = percentile(p90s, 50.0);
    m.p90of90_um = percentile(p90s, 90.0);
    m.mean90_um = std::accumulate(p90s.begin(), p90s.end(), 0.0) / double(p90s.size());
    require(!pooled_tres.empty(), errc::empty_eval, "no pooled TREs to aggregate");
    m.median_all_um = percentile(pooled_tres, 50.0);
    m.mean_all_um =
        std::accumulate(pooled_tres.begin(), pooled_tres.end(), 0.0) / double(pooled_tres.size());
    if (red_n > 0) {
        m.reduction_pct = red_sum / double(red_n);
    } else {
        m.reduction_defined = false;
        m.reduction_pct = std::numeric_limits<double>::quiet_NaN();
    }
    return m;
}

} // namespace slidereg
