#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "survrisk/calibration.hpp"
#include "survrisk/concordance.hpp"
#include "survrisk/csv.hpp"
#include "survrisk/error.hpp"
#include "survrisk/model.hpp"
#include "survrisk/net_benefit.hpp"
#include "survrisk/poisson.hpp"

namespace survrisk {

constexpr int kReportSchemaVersion = 1;

struct EvaluateOptions {
    double horizon_days = 1826.0;
    std::vector<double> thresholds = default_thresholds();
    std::uint64_t seed = 0;
    bool use_ipcw = false;  // report the IPCW C instead of truncated Harrell's
    ConcordanceOptions concordance;
    int gnd_bins = 0;  // 0 = round(N^(1/3))
    long min_subgroup = 50;
};

struct MetricFlag {
    bool defined = true;
    std::string reason;
};

struct EvaluationReport {
    std::string model_id;
    std::string group_id = "overall";
    long n = 0;
    long events_at_horizon = 0;
    double horizon_days = 0.0;
    std::vector<double> thresholds;
    bool small_sample = false;

    ConcordanceResult concordance;
    MetricFlag c_flag;
    OeEstimate oe;
    MetricFlag oe_flag;
    GndResult gnd;
    MetricFlag gnd_flag;
    CalibrationLine calibration;
    MetricFlag cal_flag;
    std::vector<NetBenefitResult> net_benefits;  // one per threshold
    MetricFlag nb_flag;
    DecisionCurve curve;
    MetricFlag curve_flag;
    CalibrationBins plot_bins;
    MetricFlag bins_flag;
};

namespace detail {

// Metric suite over precomputed per-subject inputs; individual metric
// failures become undefined flags instead of aborting the report.
inline EvaluationReport evaluate_arrays(const std::string& model_id, const std::string& group_id,
                                        const std::vector<double>& predictions,
                                        const std::vector<double>& times,
                                        const std::vector<bool>& events,
                                        const std::vector<double>& expected,
                                        const EvaluateOptions& options, std::uint64_t seed) {
    EvaluationReport rep;
    rep.model_id = model_id;
    rep.group_id = group_id;
    rep.n = static_cast<long>(times.size());
    rep.horizon_days = options.horizon_days;
    rep.thresholds = options.thresholds;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (events[i] && times[i] <= options.horizon_days) ++rep.events_at_horizon;

    auto fail = [](MetricFlag& flag, const std::string& why) {
        flag.defined = false;
        flag.reason = why;
    };

    try {
        ConcordanceOptions copts = options.concordance;
        copts.seed = derive_seed(seed, 1);
        if (options.use_ipcw) {
            const KaplanMeierCurve g = censoring_survival(times, events);
            rep.concordance = ipcw_c(predictions, times, events, options.horizon_days, g, copts);
        } else {
            rep.concordance = harrell_c(predictions, times, events, options.horizon_days, copts);
        }
    } catch (const Error& e) {
        fail(rep.c_flag, e.what());
    }

    try {
        rep.oe = observed_expected(events, expected);
        if (!rep.oe.defined) fail(rep.oe_flag, rep.oe.reason);
    } catch (const Error& e) {
        fail(rep.oe_flag, e.what());
    }

    try {
        rep.gnd = gnd_test(predictions, times, events, options.horizon_days, options.gnd_bins);
    } catch (const Error& e) {
        fail(rep.gnd_flag, e.what());
    }

    try {
        rep.calibration = calibration_line_from_hazards(events, expected);
    } catch (const Error& e) {
        fail(rep.cal_flag, e.what());
    }

    try {
        for (double t : options.thresholds)
            rep.net_benefits.push_back(
                net_benefit(predictions, times, events, options.horizon_days, t));
    } catch (const Error& e) {
        rep.net_benefits.clear();
        fail(rep.nb_flag, e.what());
    }

    try {
        rep.curve = decision_curve(predictions, times, events, options.horizon_days,
                                   options.thresholds);
    } catch (const Error& e) {
        fail(rep.curve_flag, e.what());
    }

    try {
        rep.plot_bins = calibration_plot_data(predictions, times, events, options.horizon_days,
                                              options.gnd_bins);
    } catch (const Error& e) {
        fail(rep.bins_flag, e.what());
    }
    return rep;
}

inline EvaluationReport undefined_report(const std::string& model_id, const std::string& group_id,
                                         long n, long events_at_horizon,
                                         const EvaluateOptions& options, const std::string& why) {
    EvaluationReport rep;
    rep.model_id = model_id;
    rep.group_id = group_id;
    rep.n = n;
    rep.events_at_horizon = events_at_horizon;
    rep.horizon_days = options.horizon_days;
    rep.thresholds = options.thresholds;
    rep.small_sample = true;
    rep.c_flag = rep.oe_flag = rep.gnd_flag = rep.cal_flag = rep.nb_flag = rep.curve_flag =
        rep.bins_flag = MetricFlag{false, why};
    return rep;
}

}  // namespace detail

inline EvaluationReport evaluate_model(const Model& model, const Cohort& cohort,
                                       const EvaluateOptions& options = {},
                                       const std::string& model_id = "model") {
    const std::vector<double> predictions = predict_risks(model, cohort, options.horizon_days);
    const std::vector<double> expected = expected_hazards(model, cohort);
    return detail::evaluate_arrays(model_id, "overall", predictions, cohort.follow_up_times(),
                                   cohort.event_flags(), expected, options, options.seed);
}

enum class SubgroupKind { ckd, ra, location, custom_flag };

struct SubgroupSpec {
    SubgroupKind kind = SubgroupKind::ckd;
    LocationMap locations;   // location kind
    std::string flag_name;   // custom_flag kind: any 0/1 covariate
};

// Label -> member row indices; labels partition the cohort.
inline std::map<std::string, std::vector<std::size_t>> subgroup_partition(const Cohort& cohort,
                                                                          const SubgroupSpec& spec) {
    std::map<std::string, std::vector<std::size_t>> parts;
    auto flag_split = [&](const std::string& name) {
        for (std::size_t i = 0; i < cohort.size(); ++i) {
            const double v = covariate_value(cohort.subjects[i], name);
            parts[name + "=" + (v != 0.0 ? "1" : "0")].push_back(i);
        }
    };
    switch (spec.kind) {
        case SubgroupKind::ckd: flag_split("ckd"); break;
        case SubgroupKind::ra: flag_split("ra"); break;
        case SubgroupKind::custom_flag:
            if (spec.flag_name.empty()) throw ConfigError("custom_flag subgroup needs a flag name");
            flag_split(spec.flag_name);
            break;
        case SubgroupKind::location:
            for (std::size_t i = 0; i < cohort.size(); ++i) {
                const int g = spec.locations.group_of(cohort.subjects[i].zip3());
                parts["loc_" + std::to_string(g)].push_back(i);
            }
            break;
    }
    return parts;
}

// One report per subgroup; predictions computed once on the full cohort.
// Subgroups below options.min_subgroup subjects come back flagged instead of
// evaluated.
inline std::vector<EvaluationReport> evaluate_subgroups(const Model& model, const Cohort& cohort,
                                                        const SubgroupSpec& spec,
                                                        const EvaluateOptions& options = {},
                                                        const std::string& model_id = "model") {
    const std::vector<double> predictions = predict_risks(model, cohort, options.horizon_days);
    const std::vector<double> expected = expected_hazards(model, cohort);
    const std::vector<double> times = cohort.follow_up_times();
    const std::vector<bool> events = cohort.event_flags();

    std::vector<EvaluationReport> reports;
    std::uint64_t subgroup_index = 0;
    for (const auto& [label, members] : subgroup_partition(cohort, spec)) {
        ++subgroup_index;
        std::vector<double> p, t, e;
        std::vector<bool> ev;
        p.reserve(members.size());
        for (std::size_t i : members) {
            p.push_back(predictions[i]);
            t.push_back(times[i]);
            ev.push_back(events[i]);
            e.push_back(expected[i]);
        }
        if (static_cast<long>(members.size()) < options.min_subgroup) {
            long events_at_h = 0;
            for (std::size_t k = 0; k < t.size(); ++k)
                if (ev[k] && t[k] <= options.horizon_days) ++events_at_h;
            reports.push_back(detail::undefined_report(model_id, label,
                                                       static_cast<long>(members.size()),
                                                       events_at_h, options,
                                                       "subgroup below minimum size"));
            continue;
        }
        reports.push_back(detail::evaluate_arrays(model_id, label, p, t, ev, e, options,
                                                  derive_seed(options.seed, subgroup_index)));
    }
    return reports;
}

// ---------------------------------------------------------------- compare ---

struct ComparisonRow {
    std::string group_id;
    double delta_c = 0.0;
    bool delta_c_defined = false;
    double oe_improvement = 0.0;  // |oe_base - 1| - |oe_revised - 1|
    bool oe_defined = false;
    double alpha_improvement = 0.0;  // |a_base| - |a_revised|
    double slope_improvement = 0.0;  // |b_base - 1| - |b_revised - 1|
    bool cal_defined = false;
    std::vector<double> delta_nb;  // per threshold, revised - baseline
    std::vector<NbCounts> counts;
    bool nb_defined = false;
};

struct DistributionSummary {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    long n = 0;
};

struct ComparisonReport {
    std::string baseline_id;
    std::string revised_id;
    std::vector<double> thresholds;
    std::vector<ComparisonRow> rows;
    std::map<std::string, DistributionSummary> distributions;
};

namespace detail {

inline DistributionSummary summarize(std::vector<double> values) {
    DistributionSummary s;
    s.n = static_cast<long>(values.size());
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return values[lo] * (1.0 - frac) + values[hi] * frac;
    };
    s.min = values.front();
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    s.max = values.back();
    return s;
}

inline std::string threshold_suffix(double t) {
    std::string s = fmt_double(t);
    s.erase(std::remove(s.begin(), s.end(), '.'), s.end());
    return s;
}

}  // namespace detail

// Per-group deltas of the revised model against the baseline: positive values
// mean the revised model is better (closer to the ideal for calibration).
inline ComparisonReport compare_models(const std::vector<EvaluationReport>& baseline,
                                       const std::vector<EvaluationReport>& revised) {
    if (baseline.empty() || revised.empty()) throw DataError("compare_models: empty report list");
    std::map<std::string, const EvaluationReport*> by_group;
    for (const auto& r : revised) by_group[r.group_id] = &r;
    if (by_group.size() != revised.size() || baseline.size() != revised.size())
        throw DataError("compare_models: group sets do not match");

    ComparisonReport cmp;
    cmp.baseline_id = baseline.front().model_id;
    cmp.revised_id = revised.front().model_id;
    cmp.thresholds = baseline.front().thresholds;

    for (const auto& b : baseline) {
        auto it = by_group.find(b.group_id);
        if (it == by_group.end())
            throw DataError("compare_models: group " + b.group_id + " missing from revised reports");
        const EvaluationReport& r = *it->second;
        if (b.thresholds != r.thresholds)
            throw DataError("compare_models: reports use different thresholds");

        ComparisonRow row;
        row.group_id = b.group_id;
        if (b.c_flag.defined && r.c_flag.defined) {
            row.delta_c = r.concordance.estimate - b.concordance.estimate;
            row.delta_c_defined = true;
        }
        if (b.oe_flag.defined && r.oe_flag.defined) {
            row.oe_improvement = std::abs(b.oe.oe - 1.0) - std::abs(r.oe.oe - 1.0);
            row.oe_defined = true;
        }
        if (b.cal_flag.defined && r.cal_flag.defined) {
            row.alpha_improvement =
                std::abs(b.calibration.intercept) - std::abs(r.calibration.intercept);
            row.slope_improvement =
                std::abs(b.calibration.slope - 1.0) - std::abs(r.calibration.slope - 1.0);
            row.cal_defined = true;
        }
        if (b.nb_flag.defined && r.nb_flag.defined &&
            b.net_benefits.size() == b.thresholds.size() &&
            r.net_benefits.size() == r.thresholds.size()) {
            row.nb_defined = true;
            for (std::size_t k = 0; k < b.thresholds.size(); ++k) {
                const double d = r.net_benefits[k].value - b.net_benefits[k].value;
                row.delta_nb.push_back(d);
                row.counts.push_back(nb_difference_to_counts(r.net_benefits[k].value,
                                                             b.net_benefits[k].value,
                                                             b.thresholds[k]));
            }
        }
        cmp.rows.push_back(std::move(row));
    }

    std::vector<double> dc, oe, al, sl;
    std::map<std::string, std::vector<double>> dnb;
    for (const auto& row : cmp.rows) {
        if (row.delta_c_defined) dc.push_back(row.delta_c);
        if (row.oe_defined) oe.push_back(row.oe_improvement);
        if (row.cal_defined) {
            al.push_back(row.alpha_improvement);
            sl.push_back(row.slope_improvement);
        }
        if (row.nb_defined)
            for (std::size_t k = 0; k < cmp.thresholds.size(); ++k)
                dnb["dnb_" + detail::threshold_suffix(cmp.thresholds[k])].push_back(
                    row.delta_nb[k]);
    }
    cmp.distributions["delta_c"] = detail::summarize(std::move(dc));
    cmp.distributions["oe_impr"] = detail::summarize(std::move(oe));
    cmp.distributions["alpha_impr"] = detail::summarize(std::move(al));
    cmp.distributions["slope_impr"] = detail::summarize(std::move(sl));
    for (auto& [key, values] : dnb) cmp.distributions[key] = detail::summarize(std::move(values));
    return cmp;
}

// ---------------------------------------------------------- serialization ---

namespace detail {

inline void set_metric(nlohmann::json& j, const char* key, double value, bool defined) {
    if (defined)
        j[key] = value;
    else
        j[key] = nullptr;
}

}  // namespace detail

inline nlohmann::json report_to_json(const EvaluationReport& rep) {
    nlohmann::json j;
    j["model_id"] = rep.model_id;
    j["group_id"] = rep.group_id;
    j["n"] = rep.n;
    j["events"] = rep.events_at_horizon;
    j["horizon_days"] = rep.horizon_days;
    j["small_sample"] = rep.small_sample;
    detail::set_metric(j, "c_index", rep.concordance.estimate, rep.c_flag.defined);
    detail::set_metric(j, "c_low", rep.concordance.ci_low, rep.c_flag.defined);
    detail::set_metric(j, "c_high", rep.concordance.ci_high, rep.c_flag.defined);
    detail::set_metric(j, "oe", rep.oe.oe, rep.oe_flag.defined);
    detail::set_metric(j, "gnd_stat", rep.gnd.statistic, rep.gnd_flag.defined);
    if (rep.gnd_flag.defined)
        j["gnd_df"] = rep.gnd.df;
    else
        j["gnd_df"] = nullptr;
    detail::set_metric(j, "gnd_p", rep.gnd.p_value, rep.gnd_flag.defined);
    detail::set_metric(j, "cal_intercept", rep.calibration.intercept, rep.cal_flag.defined);
    detail::set_metric(j, "cal_slope", rep.calibration.slope, rep.cal_flag.defined);
    for (std::size_t k = 0; k < rep.thresholds.size(); ++k) {
        const std::string key = "nb_" + fmt_double(rep.thresholds[k]);
        detail::set_metric(j, key.c_str(), rep.nb_flag.defined ? rep.net_benefits[k].value : 0.0,
                           rep.nb_flag.defined);
    }
    j["thresholds"] = rep.thresholds;
    nlohmann::json undefined = nlohmann::json::object();
    auto note = [&](const char* key, const MetricFlag& flag) {
        if (!flag.defined) undefined[key] = flag.reason;
    };
    note("c_index", rep.c_flag);
    note("oe", rep.oe_flag);
    note("gnd", rep.gnd_flag);
    note("calibration", rep.cal_flag);
    note("net_benefit", rep.nb_flag);
    note("decision_curve", rep.curve_flag);
    note("calibration_bins", rep.bins_flag);
    j["undefined"] = undefined;
    return j;
}

inline EvaluationReport report_from_json(const nlohmann::json& j) {
    EvaluationReport rep;
    rep.model_id = j.at("model_id").get<std::string>();
    rep.group_id = j.at("group_id").get<std::string>();
    rep.n = j.at("n").get<long>();
    rep.events_at_horizon = j.at("events").get<long>();
    rep.horizon_days = j.at("horizon_days").get<double>();
    rep.small_sample = j.at("small_sample").get<bool>();
    rep.thresholds = j.at("thresholds").get<std::vector<double>>();
    const auto& undefined = j.at("undefined");

    rep.c_flag.defined = !j.at("c_index").is_null();
    if (rep.c_flag.defined) {
        rep.concordance.estimate = j.at("c_index").get<double>();
        rep.concordance.ci_low = j.at("c_low").get<double>();
        rep.concordance.ci_high = j.at("c_high").get<double>();
    } else if (undefined.contains("c_index")) {
        rep.c_flag.reason = undefined.at("c_index").get<std::string>();
    }
    rep.oe_flag.defined = !j.at("oe").is_null();
    if (rep.oe_flag.defined) {
        rep.oe.oe = j.at("oe").get<double>();
        rep.oe.defined = true;
    }
    rep.gnd_flag.defined = !j.at("gnd_stat").is_null();
    if (rep.gnd_flag.defined) {
        rep.gnd.statistic = j.at("gnd_stat").get<double>();
        rep.gnd.df = j.at("gnd_df").get<int>();
        rep.gnd.p_value = j.at("gnd_p").get<double>();
    }
    rep.cal_flag.defined = !j.at("cal_intercept").is_null();
    if (rep.cal_flag.defined) {
        rep.calibration.intercept = j.at("cal_intercept").get<double>();
        rep.calibration.slope = j.at("cal_slope").get<double>();
    }
    rep.nb_flag.defined = true;
    for (double t : rep.thresholds) {
        const auto& v = j.at("nb_" + fmt_double(t));
        if (v.is_null()) {
            rep.nb_flag.defined = false;
            rep.net_benefits.clear();
            break;
        }
        NetBenefitResult nb;
        nb.value = v.get<double>();
        rep.net_benefits.push_back(nb);
    }
    return rep;
}

inline nlohmann::json reports_to_json(const std::vector<EvaluationReport>& reports,
                                      const nlohmann::json& config = {}) {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    if (!config.is_null()) j["config"] = config;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(report_to_json(r));
    j["reports"] = arr;
    return j;
}

inline std::vector<EvaluationReport> reports_from_json(const nlohmann::json& j) {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kReportSchemaVersion)
        throw DataError("unsupported report schema version");
    std::vector<EvaluationReport> out;
    for (const auto& r : j.at("reports")) out.push_back(report_from_json(r));
    return out;
}

inline nlohmann::json comparison_to_json(const ComparisonReport& cmp,
                                         const nlohmann::json& config = {}) {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    if (!config.is_null()) j["config"] = config;
    j["baseline_id"] = cmp.baseline_id;
    j["revised_id"] = cmp.revised_id;
    j["thresholds"] = cmp.thresholds;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : cmp.rows) {
        nlohmann::json r;
        r["group_id"] = row.group_id;
        detail::set_metric(r, "delta_c", row.delta_c, row.delta_c_defined);
        detail::set_metric(r, "oe_impr", row.oe_improvement, row.oe_defined);
        detail::set_metric(r, "alpha_impr", row.alpha_improvement, row.cal_defined);
        detail::set_metric(r, "slope_impr", row.slope_improvement, row.cal_defined);
        for (std::size_t k = 0; k < cmp.thresholds.size(); ++k) {
            const std::string suffix = detail::threshold_suffix(cmp.thresholds[k]);
            detail::set_metric(r, ("dnb_" + suffix).c_str(),
                               row.nb_defined ? row.delta_nb[k] : 0.0, row.nb_defined);
            if (row.nb_defined) {
                r["extra_tp_" + suffix] = row.counts[k].extra_tp_per_1000;
                r["avoided_fp_" + suffix] = row.counts[k].avoided_fp_per_1000;
            } else {
                r["extra_tp_" + suffix] = nullptr;
                r["avoided_fp_" + suffix] = nullptr;
            }
        }
        rows.push_back(std::move(r));
    }
    j["rows"] = rows;
    nlohmann::json dist = nlohmann::json::object();
    for (const auto& [key, s] : cmp.distributions)
        dist[key] = {{"min", s.min}, {"q1", s.q1},   {"median", s.median},
                     {"q3", s.q3},   {"max", s.max}, {"n", s.n}};
    j["distributions"] = dist;
    return j;
}

// ------------------------------------------------------------ CSV exports ---

inline void write_comparison_csv(const ComparisonReport& cmp, const std::string& path) {
    std::vector<std::string> header = {"group_id", "delta_c", "oe_impr", "alpha_impr",
                                       "slope_impr"};
    for (double t : cmp.thresholds) header.push_back("dnb_" + detail::threshold_suffix(t));
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : cmp.rows) {
        std::vector<std::string> r = {row.group_id,
                                      row.delta_c_defined ? fmt_double(row.delta_c) : "",
                                      row.oe_defined ? fmt_double(row.oe_improvement) : "",
                                      row.cal_defined ? fmt_double(row.alpha_improvement) : "",
                                      row.cal_defined ? fmt_double(row.slope_improvement) : ""};
        for (std::size_t k = 0; k < cmp.thresholds.size(); ++k)
            r.push_back(row.nb_defined ? fmt_double(row.delta_nb[k]) : "");
        rows.push_back(std::move(r));
    }
    write_csv(path, header, rows);
}

inline void write_calibration_csv(const std::vector<EvaluationReport>& reports,
                                  const std::string& path) {
    const std::vector<std::string> header = {"group_id", "bin",           "count",
                                             "events",   "mean_predicted", "observed_risk",
                                             "variance", "ci_low",        "ci_high"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& rep : reports) {
        if (!rep.bins_flag.defined) continue;
        for (std::size_t b = 0; b < rep.plot_bins.bins.size(); ++b) {
            const auto& bin = rep.plot_bins.bins[b];
            rows.push_back({rep.group_id, std::to_string(b + 1), std::to_string(bin.count),
                            std::to_string(bin.events_by_horizon), fmt_double(bin.mean_predicted),
                            fmt_double(bin.observed_risk), fmt_double(bin.variance),
                            fmt_double(bin.ci_low), fmt_double(bin.ci_high)});
        }
    }
    write_csv(path, header, rows);
}

inline void write_decision_curve_csv(const std::vector<EvaluationReport>& reports,
                                     const std::string& path) {
    const std::vector<std::string> header = {"group_id", "threshold", "nb_model", "nb_treat_all",
                                             "nb_treat_none"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& rep : reports) {
        if (!rep.curve_flag.defined) continue;
        for (std::size_t k = 0; k < rep.curve.thresholds.size(); ++k)
            rows.push_back({rep.group_id, fmt_double(rep.curve.thresholds[k]),
                            fmt_double(rep.curve.nb_model[k]), fmt_double(rep.curve.nb_treat_all[k]),
                            fmt_double(rep.curve.nb_treat_none[k])});
    }
    write_csv(path, header, rows);
}

}  // namespace survrisk
