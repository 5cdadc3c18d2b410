#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "survrisk/error.hpp"
#include "survrisk/kaplan_meier.hpp"
#include "survrisk/rng.hpp"

namespace survrisk {

enum class ConcordanceMethod { harrell_truncated, ipcw };

struct ConcordanceResult {
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    long long n_usable_pairs = 0;
    long long n_dropped_pairs = 0;  // ipcw pairs with a zero censoring-survival weight
    ConcordanceMethod method = ConcordanceMethod::harrell_truncated;
};

struct ConcordanceOptions {
    bool ties_half = false;       // credit 0.5 for tied predictions instead of 0
    bool with_ci = true;
    int bootstrap_reps = 200;
    std::uint64_t seed = 0;
};

namespace detail {

class Fenwick {
  public:
    explicit Fenwick(int n) : tree_(static_cast<std::size_t>(n) + 1, 0.0) {}
    void add(int i, double v) {
        for (++i; i < static_cast<int>(tree_.size()); i += i & -i) tree_[static_cast<std::size_t>(i)] += v;
    }
    double prefix(int i) const {  // sum of [0, i]
        double s = 0.0;
        for (++i; i > 0; i -= i & -i) s += tree_[static_cast<std::size_t>(i)];
        return s;
    }

  private:
    std::vector<double> tree_;
};

struct PairCounts {
    double numerator = 0.0;    // weighted concordant (+ half-credit ties if enabled)
    double denominator = 0.0;  // weighted usable pairs
    long long usable = 0;
    long long dropped = 0;
};

// One descending-time sweep. A pair (i, j) is usable when subject i has an
// observed event with time <= horizon and time_i < time_j; concordance needs
// prediction_i > prediction_j. weight, if given, is the per-i pair weight;
// a non-finite weight drops i's pairs (counted).
inline PairCounts concordance_sweep(const std::vector<double>& predictions,
                                    const std::vector<double>& times,
                                    const std::vector<bool>& events, double horizon,
                                    bool ties_half, const std::vector<double>* weight) {
    const int n = static_cast<int>(times.size());
    std::vector<double> sorted_preds(predictions);
    std::sort(sorted_preds.begin(), sorted_preds.end());
    sorted_preds.erase(std::unique(sorted_preds.begin(), sorted_preds.end()), sorted_preds.end());
    auto rank_of = [&](double p) {
        return static_cast<int>(std::lower_bound(sorted_preds.begin(), sorted_preds.end(), p) -
                                sorted_preds.begin());
    };

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ta = times[static_cast<std::size_t>(a)];
        const double tb = times[static_cast<std::size_t>(b)];
        return ta != tb ? ta > tb : a < b;
    });

    Fenwick counts(static_cast<int>(sorted_preds.size()));
    long long inserted = 0;
    PairCounts out;
    int k = 0;
    while (k < n) {
        int block_end = k;
        const double t = times[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
        while (block_end < n &&
               times[static_cast<std::size_t>(order[static_cast<std::size_t>(block_end)])] == t)
            ++block_end;
        // query this tie block against strictly later times already inserted
        for (int q = k; q < block_end; ++q) {
            const int i = order[static_cast<std::size_t>(q)];
            if (!events[static_cast<std::size_t>(i)] || t > horizon) continue;
            if (inserted == 0) continue;
            const double w = weight ? (*weight)[static_cast<std::size_t>(i)] : 1.0;
            if (!std::isfinite(w)) {
                out.dropped += inserted;
                continue;
            }
            const int r = rank_of(predictions[static_cast<std::size_t>(i)]);
            const double below = r > 0 ? counts.prefix(r - 1) : 0.0;
            const double tied = counts.prefix(r) - below;
            out.numerator += w * (below + (ties_half ? 0.5 * tied : 0.0));
            out.denominator += w * static_cast<double>(inserted);
            out.usable += inserted;
        }
        for (int q = k; q < block_end; ++q) {
            const int i = order[static_cast<std::size_t>(q)];
            counts.add(rank_of(predictions[static_cast<std::size_t>(i)]), 1.0);
            ++inserted;
        }
        k = block_end;
    }
    return out;
}

// Per-subject IPCW pair weights 1 / G(t-)^2; infinite when G(t-) = 0, which
// the sweep treats as a dropped pair.
inline std::vector<double> ipcw_weights(const std::vector<double>& times,
                                        const KaplanMeierCurve& censor_curve) {
    std::vector<double> w(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double g = censor_curve.survival_before(times[i]);
        w[i] = g > 0.0 ? 1.0 / (g * g) : std::numeric_limits<double>::infinity();
    }
    return w;
}

template <typename Estimator>
inline void percentile_bootstrap(ConcordanceResult& result, std::size_t n, int reps,
                                 std::uint64_t seed, Estimator estimate_on) {
    std::vector<double> stats;
    stats.reserve(static_cast<std::size_t>(reps));
    std::vector<std::size_t> draw(n);
    for (int b = 0; b < reps; ++b) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
        for (std::size_t i = 0; i < n; ++i)
            draw[i] = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(n) - 1));
        double value;
        if (estimate_on(draw, value)) stats.push_back(value);
    }
    if (stats.empty()) {
        result.ci_low = result.ci_high = result.estimate;
        return;
    }
    std::sort(stats.begin(), stats.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(stats.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, stats.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return stats[lo] * (1.0 - frac) + stats[hi] * frac;
    };
    result.ci_low = std::min(quantile(0.025), result.estimate);
    result.ci_high = std::max(quantile(0.975), result.estimate);
}

}  // namespace detail

// Truncated Harrell's C at the horizon: fraction of usable pairs where the
// earlier-event subject carries the strictly higher prediction.
inline ConcordanceResult harrell_c(const std::vector<double>& predictions,
                                   const std::vector<double>& times,
                                   const std::vector<bool>& events, double horizon,
                                   const ConcordanceOptions& options = {}) {
    if (predictions.size() != times.size() || times.size() != events.size())
        throw DataError("concordance input length mismatch");
    if (horizon <= 0.0) throw DataError("horizon must be positive");
    for (double p : predictions)
        if (!std::isfinite(p)) throw DataError("non-finite prediction");

    auto counts = detail::concordance_sweep(predictions, times, events, horizon,
                                            options.ties_half, nullptr);
    if (counts.usable == 0) throw DataError("concordance undefined: no usable pairs");
    ConcordanceResult result;
    result.method = ConcordanceMethod::harrell_truncated;
    result.estimate = counts.numerator / counts.denominator;
    result.n_usable_pairs = counts.usable;
    result.ci_low = result.ci_high = result.estimate;
    if (options.with_ci) {
        const std::size_t n = times.size();
        std::vector<double> bp(n), bt(n);
        std::vector<bool> be(n);
        detail::percentile_bootstrap(
            result, n, options.bootstrap_reps, options.seed,
            [&](const std::vector<std::size_t>& draw, double& value) {
                for (std::size_t i = 0; i < n; ++i) {
                    bp[i] = predictions[draw[i]];
                    bt[i] = times[draw[i]];
                    be[i] = events[draw[i]];
                }
                auto c = detail::concordance_sweep(bp, bt, be, horizon, options.ties_half, nullptr);
                if (c.denominator <= 0.0) return false;
                value = c.numerator / c.denominator;
                return true;
            });
    }
    return result;
}

// IPCW concordance: usable pairs reweighted by the inverse squared
// censoring-survival just before the earlier subject's event time. The
// censor curve must come from censoring_survival on the same data; bootstrap
// replicates re-estimate it on each resample.
inline ConcordanceResult ipcw_c(const std::vector<double>& predictions,
                                const std::vector<double>& times, const std::vector<bool>& events,
                                double horizon, const KaplanMeierCurve& censor_curve,
                                const ConcordanceOptions& options = {}) {
    if (predictions.size() != times.size() || times.size() != events.size())
        throw DataError("concordance input length mismatch");
    if (horizon <= 0.0) throw DataError("horizon must be positive");
    for (double p : predictions)
        if (!std::isfinite(p)) throw DataError("non-finite prediction");

    const std::vector<double> weights = detail::ipcw_weights(times, censor_curve);
    auto counts =
        detail::concordance_sweep(predictions, times, events, horizon, options.ties_half, &weights);
    if (counts.usable == 0) throw DataError("concordance undefined: no usable pairs");
    if (counts.denominator <= 0.0)
        throw DataError("concordance undefined: all pair weights degenerate");
    ConcordanceResult result;
    result.method = ConcordanceMethod::ipcw;
    result.estimate = counts.numerator / counts.denominator;
    result.n_usable_pairs = counts.usable;
    result.n_dropped_pairs = counts.dropped;
    result.ci_low = result.ci_high = result.estimate;
    if (options.with_ci) {
        const std::size_t n = times.size();
        std::vector<double> bp(n), bt(n);
        std::vector<bool> be(n);
        detail::percentile_bootstrap(
            result, n, options.bootstrap_reps, options.seed,
            [&](const std::vector<std::size_t>& draw, double& value) {
                for (std::size_t i = 0; i < n; ++i) {
                    bp[i] = predictions[draw[i]];
                    bt[i] = times[draw[i]];
                    be[i] = events[draw[i]];
                }
                const KaplanMeierCurve g = censoring_survival(bt, be);
                const std::vector<double> bw = detail::ipcw_weights(bt, g);
                auto c = detail::concordance_sweep(bp, bt, be, horizon, options.ties_half, &bw);
                if (c.denominator <= 0.0) return false;
                value = c.numerator / c.denominator;
                return true;
            });
    }
    return result;
}

}  // namespace survrisk
