#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "survrisk/error.hpp"
#include "survrisk/kaplan_meier.hpp"

namespace survrisk {

namespace detail {

// Regularized lower incomplete gamma P(s, x) by series (x < s+1) or continued
// fraction (x >= s+1), absolute tolerance 1e-12.
inline double regularized_gamma_p(double s, double x) {
    if (x < 0.0 || s <= 0.0) throw NumericError("regularized_gamma_p domain error");
    if (x == 0.0) return 0.0;
    const double log_prefactor = s * std::log(x) - x - std::lgamma(s);
    if (x < s + 1.0) {
        double term = 1.0 / s, sum = term;
        for (int k = 1; k < 10000; ++k) {
            term *= x / (s + k);
            sum += term;
            if (std::abs(term) < 1e-12 * std::abs(sum) || std::abs(term) < 1e-300) break;
        }
        return std::exp(log_prefactor) * sum;
    }
    // Lentz continued fraction for Q(s, x)
    const double tiny = 1e-300;
    double b = x + 1.0 - s, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int k = 1; k < 10000; ++k) {
        const double an = -static_cast<double>(k) * (static_cast<double>(k) - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-12) break;
    }
    return 1.0 - std::exp(log_prefactor) * h;
}

inline double regularized_gamma_q(double s, double x) { return 1.0 - regularized_gamma_p(s, x); }

}  // namespace detail

// Upper-tail p-value of a chi-square statistic with df degrees of freedom.
inline double chi_square_upper_tail(double statistic, int df) {
    if (df < 1) throw NumericError("chi-square df must be >= 1");
    if (statistic < 0.0) throw NumericError("chi-square statistic must be non-negative");
    if (std::isinf(statistic)) return 0.0;
    return detail::regularized_gamma_q(df / 2.0, statistic / 2.0);
}

struct CalibrationBin {
    long count = 0;
    long events_by_horizon = 0;   // observed events with time <= horizon
    double mean_predicted = 0.0;
    double observed_risk = 0.0;   // 1 - KM(horizon) within the bin
    double variance = 0.0;        // Greenwood variance of KM(horizon)
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::vector<int> members;     // row indices, kept for merging
};

struct CalibrationBins {
    std::vector<CalibrationBin> bins;
    int requested_k = 0;
};

struct GndResult {
    double statistic = 0.0;
    int df = 1;
    double p_value = 1.0;
    CalibrationBins bins;  // post-merge
};

// Default bin count: round(N^(1/3)).
inline int default_bin_count(std::size_t n) {
    return static_cast<int>(std::llround(std::cbrt(static_cast<double>(n))));
}

namespace detail {

inline void fill_bin_statistics(CalibrationBin& bin, const std::vector<double>& predictions,
                                const std::vector<double>& times, const std::vector<bool>& events,
                                double horizon) {
    bin.count = static_cast<long>(bin.members.size());
    bin.events_by_horizon = 0;
    double pred_sum = 0.0;
    std::vector<double> t;
    std::vector<bool> e;
    t.reserve(bin.members.size());
    e.reserve(bin.members.size());
    for (int i : bin.members) {
        pred_sum += predictions[static_cast<std::size_t>(i)];
        t.push_back(times[static_cast<std::size_t>(i)]);
        e.push_back(events[static_cast<std::size_t>(i)]);
        if (events[static_cast<std::size_t>(i)] && times[static_cast<std::size_t>(i)] <= horizon)
            ++bin.events_by_horizon;
    }
    bin.mean_predicted = pred_sum / static_cast<double>(bin.count);
    const KaplanMeierCurve km = kaplan_meier(t, e);
    bin.observed_risk = 1.0 - km.survival_at(horizon);
    bin.variance = km.variance_at(horizon);
    const double half = 1.96 * std::sqrt(bin.variance);
    bin.ci_low = std::max(0.0, bin.observed_risk - half);
    bin.ci_high = std::min(1.0, bin.observed_risk + half);
}

// Equal-count quantile bins on predicted risk; tied prediction values never
// straddle a bin boundary, so bin counts may deviate from N/K where ties force it.
inline CalibrationBins quantile_bins(const std::vector<double>& predictions,
                                     const std::vector<double>& times,
                                     const std::vector<bool>& events, double horizon, int k) {
    const std::size_t n = predictions.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double pa = predictions[static_cast<std::size_t>(a)];
        const double pb = predictions[static_cast<std::size_t>(b)];
        return pa != pb ? pa < pb : a < b;
    });

    CalibrationBins out;
    out.requested_k = k;
    std::size_t start = 0;
    for (int b = 0; b < k && start < n; ++b) {
        std::size_t stop = (static_cast<std::size_t>(b) + 1) * n / static_cast<std::size_t>(k);
        if (stop <= start) stop = start + 1;
        // push the boundary past any run of tied predictions
        while (stop < n &&
               predictions[static_cast<std::size_t>(order[stop])] ==
                   predictions[static_cast<std::size_t>(order[stop - 1])])
            ++stop;
        if (b == k - 1) stop = n;
        CalibrationBin bin;
        bin.members.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(stop));
        fill_bin_statistics(bin, predictions, times, events, horizon);
        out.bins.push_back(std::move(bin));
        start = stop;
    }
    return out;
}

// Merge bins until every bin holds >= min_events observed events (or one bin
// remains): repeatedly take the lowest-event bin (ties to the lower index) and
// fold it into its adjacent neighbor with fewer events (ties to the left).
inline void merge_small_bins(CalibrationBins& cal, const std::vector<double>& predictions,
                             const std::vector<double>& times, const std::vector<bool>& events,
                             double horizon, long min_events) {
    auto& bins = cal.bins;
    while (bins.size() > 1) {
        std::size_t worst = 0;
        for (std::size_t i = 1; i < bins.size(); ++i)
            if (bins[i].events_by_horizon < bins[worst].events_by_horizon) worst = i;
        if (bins[worst].events_by_horizon >= min_events) break;
        std::size_t into;
        if (worst == 0)
            into = 1;
        else if (worst + 1 == bins.size())
            into = worst - 1;
        else
            into = bins[worst + 1].events_by_horizon < bins[worst - 1].events_by_horizon
                       ? worst + 1
                       : worst - 1;
        const std::size_t lo = std::min(worst, into), hi = std::max(worst, into);
        bins[lo].members.insert(bins[lo].members.end(), bins[hi].members.begin(),
                                bins[hi].members.end());
        fill_bin_statistics(bins[lo], predictions, times, events, horizon);
        bins.erase(bins.begin() + static_cast<std::ptrdiff_t>(hi));
    }
}

}  // namespace detail

// Quantile calibration bins with Greenwood 95% CIs (no merging), for plotting.
inline CalibrationBins calibration_plot_data(const std::vector<double>& predictions,
                                             const std::vector<double>& times,
                                             const std::vector<bool>& events, double horizon,
                                             int k = 0) {
    if (predictions.size() != times.size() || times.size() != events.size())
        throw DataError("calibration input length mismatch");
    if (predictions.empty()) throw DataError("calibration input empty");
    if (k <= 0) k = default_bin_count(predictions.size());
    return detail::quantile_bins(predictions, times, events, horizon, k);
}

// Greenwood-style calibration chi-square: per (merged) bin, the squared gap
// between KM-observed risk and mean predicted risk over the Greenwood
// variance; df = bins - 1. A zero-variance bin contributes 0 only on an exact
// match and infinity otherwise.
inline GndResult gnd_test(const std::vector<double>& predictions, const std::vector<double>& times,
                          const std::vector<bool>& events, double horizon, int k = 0,
                          long min_bin_events = 5) {
    if (predictions.size() != times.size() || times.size() != events.size())
        throw DataError("gnd_test input length mismatch");
    if (predictions.size() < 8) throw DataError("gnd_test requires at least 8 subjects");
    if (k <= 0) k = default_bin_count(predictions.size());

    GndResult result;
    result.bins = detail::quantile_bins(predictions, times, events, horizon, k);
    detail::merge_small_bins(result.bins, predictions, times, events, horizon, min_bin_events);
    const auto& bins = result.bins.bins;
    if (bins.size() < 2) throw DataError("gnd_test untestable: fewer than 2 bins after merging");

    double stat = 0.0;
    for (const auto& bin : bins) {
        const double diff = bin.observed_risk - bin.mean_predicted;
        if (bin.variance > 0.0)
            stat += diff * diff / bin.variance;
        else if (diff != 0.0)
            stat = std::numeric_limits<double>::infinity();
    }
    result.statistic = stat;
    result.df = static_cast<int>(bins.size()) - 1;
    result.p_value = chi_square_upper_tail(stat, result.df);
    return result;
}

}  // namespace survrisk
