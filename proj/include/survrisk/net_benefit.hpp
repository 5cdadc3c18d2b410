#pragma once

#include <cmath>
#include <vector>

#include "survrisk/error.hpp"
#include "survrisk/kaplan_meier.hpp"

namespace survrisk {

enum class NetBenefitMode { km, binary };

struct NetBenefitResult {
    double value = 0.0;
    long n_treated = 0;
    bool no_treated = false;  // km mode fell back to the treat-none value
};

// Net benefit of treating above a risk threshold: TP/N - FP/N * p_t/(1-p_t).
// km mode estimates the event probability inside the treated set with a
// Kaplan-Meier curve (censoring-safe); binary mode uses raw counts and
// requires every subject to be followed to the horizon or have an event.
inline NetBenefitResult net_benefit(const std::vector<double>& predictions,
                                    const std::vector<double>& times,
                                    const std::vector<bool>& events, double horizon,
                                    double threshold, NetBenefitMode mode = NetBenefitMode::km) {
    if (predictions.size() != times.size() || times.size() != events.size())
        throw DataError("net_benefit input length mismatch");
    if (predictions.empty()) throw DataError("net_benefit input empty");
    if (!(threshold > 0.0 && threshold < 1.0)) throw DataError("threshold must lie in (0,1)");

    const double n = static_cast<double>(predictions.size());
    const double odds = threshold / (1.0 - threshold);
    NetBenefitResult result;

    if (mode == NetBenefitMode::binary) {
        long tp = 0, treated = 0;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const bool event_by_horizon = events[i] && times[i] <= horizon;
            if (!event_by_horizon && times[i] < horizon)
                throw DataError("binary net benefit requires follow-up to the horizon");
            if (predictions[i] > threshold) {
                ++treated;
                if (event_by_horizon) ++tp;
            }
        }
        result.n_treated = treated;
        result.value = static_cast<double>(tp) / n -
                       static_cast<double>(treated - tp) / n * odds;
        return result;
    }

    std::vector<double> t;
    std::vector<bool> e;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] > threshold) {
            t.push_back(times[i]);
            e.push_back(events[i]);
        }
    result.n_treated = static_cast<long>(t.size());
    if (t.empty()) {
        result.no_treated = true;
        return result;  // treat-none equivalent
    }
    const double treated_fraction = static_cast<double>(t.size()) / n;
    const double km_survival = kaplan_meier(t, e).survival_at(horizon);
    result.value = treated_fraction * (1.0 - km_survival) - treated_fraction * km_survival * odds;
    return result;
}

struct DecisionCurve {
    std::vector<double> thresholds;
    std::vector<double> nb_model;
    std::vector<double> nb_treat_all;
    std::vector<double> nb_treat_none;  // identically zero
};

// Decision curve over a strictly increasing threshold grid; treat-all uses the
// KM event probability at the horizon over everyone.
inline DecisionCurve decision_curve(const std::vector<double>& predictions,
                                    const std::vector<double>& times,
                                    const std::vector<bool>& events, double horizon,
                                    const std::vector<double>& thresholds,
                                    NetBenefitMode mode = NetBenefitMode::km) {
    if (thresholds.empty()) throw DataError("decision_curve needs at least one threshold");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0))
            throw DataError("thresholds must lie in (0,1)");
        if (i > 0 && thresholds[i] <= thresholds[i - 1])
            throw DataError("thresholds must be strictly increasing");
    }
    const double pi = 1.0 - kaplan_meier(times, events).survival_at(horizon);
    DecisionCurve curve;
    curve.thresholds = thresholds;
    for (double p_t : thresholds) {
        curve.nb_model.push_back(net_benefit(predictions, times, events, horizon, p_t, mode).value);
        curve.nb_treat_all.push_back(pi - (1.0 - pi) * p_t / (1.0 - p_t));
        curve.nb_treat_none.push_back(0.0);
    }
    return curve;
}

struct NbCounts {
    double extra_tp_per_1000 = 0.0;
    double avoided_fp_per_1000 = 0.0;
};

// A net-benefit gain of (nb - nb0) at threshold p_t treats 1000*(nb-nb0) more
// true positives per 1000, or avoids that many / odds(p_t) false positives.
inline NbCounts nb_difference_to_counts(double nb, double nb0, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw DataError("threshold must lie in (0,1)");
    NbCounts counts;
    counts.extra_tp_per_1000 = 1000.0 * (nb - nb0);
    counts.avoided_fp_per_1000 = 1000.0 * (nb - nb0) * (1.0 - threshold) / threshold;
    return counts;
}

inline std::vector<double> default_thresholds() { return {0.025, 0.0375, 0.1}; }

}  // namespace survrisk
