#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "survrisk/error.hpp"

namespace survrisk {

// Product-limit curve with Greenwood variance, right-continuous in t.
// Knots are the jump times of the estimated curve only.
struct KaplanMeierCurve {
    std::vector<double> event_times;         // strictly increasing jump times
    std::vector<double> survival;            // S(t) at each jump
    std::vector<double> greenwood_variance;  // Var(S(t)) at each jump
    std::vector<int> at_risk;                // n_k at each jump
    std::vector<int> deaths;                 // d_k at each jump

    double survival_at(double t) const {
        const auto k = index_at(t);
        return k < 0 ? 1.0 : survival[static_cast<std::size_t>(k)];
    }

    double variance_at(double t) const {
        const auto k = index_at(t);
        return k < 0 ? 0.0 : greenwood_variance[static_cast<std::size_t>(k)];
    }

    // value just before t (jumps at t excluded)
    double survival_before(double t) const {
        auto it = std::lower_bound(event_times.begin(), event_times.end(), t);
        if (it == event_times.begin()) return 1.0;
        return survival[static_cast<std::size_t>(it - event_times.begin()) - 1];
    }

private:
    long index_at(double t) const {
        auto it = std::upper_bound(event_times.begin(), event_times.end(), t);
        return static_cast<long>(it - event_times.begin()) - 1;
    }
};

namespace detail {

// Shared product-limit sweep. When censoring_as_event is set the curve tracks
// the censoring distribution and, at tied times, events are removed from the
// risk set before censorings are counted.
inline KaplanMeierCurve product_limit(const std::vector<double>& times,
                                      const std::vector<bool>& events, bool censoring_as_event) {
    if (times.empty()) throw DataError("kaplan_meier: empty input");
    if (times.size() != events.size()) throw DataError("kaplan_meier: length mismatch");
    for (double t : times)
        if (!(t > 0.0)) throw DataError("kaplan_meier: times must be positive");

    const std::size_t n = times.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return times[static_cast<std::size_t>(a)] < times[static_cast<std::size_t>(b)];
    });

    KaplanMeierCurve curve;
    double surv = 1.0;
    double greenwood_sum = 0.0;
    std::size_t i = 0;
    long n_risk = static_cast<long>(n);
    bool absorbed = false;  // curve reached zero
    while (i < n) {
        const double t = times[static_cast<std::size_t>(order[i])];
        std::size_t j = i;
        int d_event = 0, d_censor = 0;
        while (j < n && times[static_cast<std::size_t>(order[j])] == t) {
            if (events[static_cast<std::size_t>(order[j])]) ++d_event;
            else ++d_censor;
            ++j;
        }
        const int jumps = censoring_as_event ? d_censor : d_event;
        // risk set for censoring jumps excludes same-time events (tie rule)
        const long risk = censoring_as_event ? n_risk - d_event : n_risk;
        if (jumps > 0 && !absorbed) {
            if (risk <= 0) throw NumericError("kaplan_meier: empty risk set at a jump time");
            surv *= 1.0 - static_cast<double>(jumps) / static_cast<double>(risk);
            if (jumps == risk) {
                surv = 0.0;
                absorbed = true;
                greenwood_sum = 0.0;  // variance pinned to 0 once the curve is absorbed
            } else {
                greenwood_sum += static_cast<double>(jumps) /
                                 (static_cast<double>(risk) * static_cast<double>(risk - jumps));
            }
            curve.event_times.push_back(t);
            curve.survival.push_back(surv);
            curve.greenwood_variance.push_back(absorbed ? 0.0 : surv * surv * greenwood_sum);
            curve.at_risk.push_back(static_cast<int>(risk));
            curve.deaths.push_back(jumps);
        }
        n_risk -= static_cast<long>(j - i);
        i = j;
    }
    return curve;
}

}  // namespace detail

// Kaplan-Meier estimate of the event-time survival function.
// Greenwood: Var(S(t)) = S(t)^2 * sum d_k / (n_k (n_k - d_k)).
inline KaplanMeierCurve kaplan_meier(const std::vector<double>& times,
                                     const std::vector<bool>& events) {
    return detail::product_limit(times, events, false);
}

// Reverse Kaplan-Meier estimate G(t) of the censoring survival function,
// treating censorings as the events of interest.
inline KaplanMeierCurve censoring_survival(const std::vector<double>& times,
                                           const std::vector<bool>& events) {
    return detail::product_limit(times, events, true);
}

}  // namespace survrisk
