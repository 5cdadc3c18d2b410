// Command-line front end: simulate | ingest | merge-locations | split | fit |
// evaluate | dca | compare | tune. Every run writes its resolved options to
// run_config.json in the output directory (paths excluded, so reruns into a
// different directory produce byte-identical artifacts), and JSON artifacts
// embed the same config. Exit codes: 0 ok, 2 config, 3 data, 4 numeric.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "survrisk/survrisk.hpp"

namespace sr = survrisk;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string out;
    std::uint64_t seed = 0;
    double horizon_days = 1826.0;
    std::vector<double> thresholds = sr::default_thresholds();
};

void add_out(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--out", c.out, "output directory (created if missing)")->required();
}

void add_common(CLI::App* cmd, CommonOpts& c) {
    add_out(cmd, c);
    cmd->add_option("--seed", c.seed, "master seed");
    cmd->add_option("--horizon-days", c.horizon_days, "risk horizon in days")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--thresholds", c.thresholds, "decision thresholds, comma separated")
        ->delimiter(',');
    cmd->set_config("--config", "", "key=value config file; command-line flags override it");
}

std::string out_path(const CommonOpts& c, const std::string& name) {
    std::filesystem::create_directories(c.out);
    return (std::filesystem::path(c.out) / name).string();
}

void write_run_config(const CommonOpts& c, const json& resolved) {
    json j;
    j["schema_version"] = sr::kModelSchemaVersion;
    j["config"] = resolved;
    sr::write_json_file(j, out_path(c, "run_config.json"));
}

json thresholds_json(const std::vector<double>& ts) { return json(ts); }

// ----------------------------------------------------------------- simulate

struct SimulateOpts {
    CommonOpts common;
    std::string config_path;
    long n_subjects = 0;
    long n_locations = 0;
    double frailty_variance = 0.0;
    double weibull_shape = 0.0;
    double weibull_scale_days = 0.0;
    double censoring_rate_per_day = 0.0;
    double admin_censor_days = 0.0;
    std::vector<std::string> beta_kv;
    CLI::App* cmd = nullptr;
};

json simulation_config_json(const sr::SimulationConfig& cfg) {
    json j;
    j["command"] = "simulate";
    j["n_subjects"] = cfg.n_subjects;
    j["n_locations"] = cfg.n_locations;
    j["frailty_variance"] = cfg.frailty_variance;
    j["weibull_shape"] = cfg.weibull_shape;
    j["weibull_scale_days"] = cfg.weibull_scale_days;
    j["censoring_rate_per_day"] = cfg.censoring_rate_per_day;
    j["admin_censor_days"] = cfg.admin_censor_days;
    j["seed"] = cfg.seed;
    json beta = json::object();
    for (const auto& [name, b] : cfg.beta) beta[name] = b;
    j["beta"] = beta;
    const auto& c = cfg.covariates;
    j["covariates"] = {{"age_min", c.age_min},
                       {"age_max", c.age_max},
                       {"hdl_min", c.hdl_min},
                       {"hdl_max", c.hdl_max},
                       {"tc_min", c.tc_min},
                       {"tc_max", c.tc_max},
                       {"p_male", c.p_male},
                       {"p_hypertension", c.p_hypertension},
                       {"p_diabetes", c.p_diabetes},
                       {"p_smoker", c.p_smoker},
                       {"p_antihypertensive", c.p_antihypertensive},
                       {"p_ckd", c.p_ckd},
                       {"p_ra", c.p_ra}};
    return j;
}

void run_simulate(SimulateOpts& o) {
    sr::SimulationConfig cfg;
    if (!o.config_path.empty()) cfg = sr::load_simulation_config(o.config_path);
    auto passed = [&](const std::string& flag) { return o.cmd->count(flag) > 0; };
    if (passed("--n-subjects")) cfg.n_subjects = o.n_subjects;
    if (passed("--n-locations")) cfg.n_locations = o.n_locations;
    if (passed("--frailty-variance")) cfg.frailty_variance = o.frailty_variance;
    if (passed("--weibull-shape")) cfg.weibull_shape = o.weibull_shape;
    if (passed("--weibull-scale-days")) cfg.weibull_scale_days = o.weibull_scale_days;
    if (passed("--censoring-rate-per-day")) cfg.censoring_rate_per_day = o.censoring_rate_per_day;
    if (passed("--admin-censor-days")) cfg.admin_censor_days = o.admin_censor_days;
    if (passed("--seed")) cfg.seed = o.common.seed;
    for (const std::string& kv : o.beta_kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw sr::ConfigError("--beta expects covariate=value, got: " + kv);
        try {
            cfg.beta[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
            throw sr::ConfigError("--beta expects a numeric value, got: " + kv);
        }
    }
    cfg.validate();
    const sr::Cohort cohort = sr::simulate_cohort(cfg);
    sr::save_cohort(cohort, out_path(o.common, "cohort.csv"));
    write_run_config(o.common, simulation_config_json(cfg));
}

// ------------------------------------------------------------------- ingest

struct IngestOpts {
    CommonOpts common;
    std::string input;
    bool apply_eligibility = false;
};

void run_ingest(IngestOpts& o) {
    sr::Cohort cohort = sr::load_cohort(o.input);
    if (o.apply_eligibility) cohort = sr::apply_eligibility(cohort);
    sr::save_cohort(cohort, out_path(o.common, "cohort.csv"));
    json cfg;
    cfg["command"] = "ingest";
    cfg["apply_eligibility"] = o.apply_eligibility;
    write_run_config(o.common, cfg);
}

// ---------------------------------------------------------- merge-locations

struct MergeOpts {
    CommonOpts common;
    std::string input;
    int min_size = 3000;
};

void run_merge(MergeOpts& o) {
    const sr::Cohort cohort = sr::load_cohort(o.input);
    const sr::LocationMap map = sr::merge_locations(cohort, o.min_size);
    json cfg;
    cfg["command"] = "merge-locations";
    cfg["min_size"] = o.min_size;
    sr::save_location_map(map, out_path(o.common, "locations.json"), cfg);
    write_run_config(o.common, cfg);
}

// -------------------------------------------------------------------- split

struct SplitOpts {
    CommonOpts common;
    std::string input;
    double train_fraction = 0.7;
};

void run_split(SplitOpts& o) {
    const sr::Cohort cohort = sr::load_cohort(o.input);
    const auto [train, test] = sr::split_train_test(cohort, o.train_fraction, o.common.seed);
    sr::save_cohort(train, out_path(o.common, "train.csv"));
    sr::save_cohort(test, out_path(o.common, "test.csv"));
    json cfg;
    cfg["command"] = "split";
    cfg["train_fraction"] = o.train_fraction;
    cfg["seed"] = o.common.seed;
    write_run_config(o.common, cfg);
}

// ---------------------------------------------------------------------- fit

struct FitOpts {
    CommonOpts common;
    std::string train_path;
    std::string valid_path;
    std::string locations_path;
    std::string model = "baseline";
    sr::BoostConfig boost;
    double fix_theta = -1.0;  // < 0 means free
    CLI::App* cmd = nullptr;
};

void run_fit(FitOpts& o) {
    const sr::ModelKind kind = sr::model_kind_from_name(o.model);
    const sr::Cohort train = sr::load_cohort(o.train_path);
    std::optional<sr::Cohort> valid;
    if (!o.valid_path.empty()) valid = sr::load_cohort(o.valid_path);
    std::optional<sr::LocationMap> locations;
    if (!o.locations_path.empty()) locations = sr::load_location_map(o.locations_path);

    o.boost.seed = o.common.seed;
    sr::FrailtyOptions frailty;
    if (o.cmd->count("--theta") > 0) {
        if (o.fix_theta < 0.0) throw sr::ConfigError("--theta must be >= 0");
        frailty.fix_theta = o.fix_theta;
    }

    sr::Model model = sr::fit_model(kind, train, valid ? &*valid : nullptr,
                                    locations ? &*locations : nullptr, o.boost, {}, frailty);

    json cfg;
    cfg["command"] = "fit";
    cfg["model"] = o.model;
    cfg["seed"] = o.common.seed;
    if (kind == sr::ModelKind::boosted) {
        cfg["max_trees"] = o.boost.max_trees;
        cfg["learning_rate"] = o.boost.learning_rate;
        cfg["max_depth"] = o.boost.max_depth;
        cfg["min_node"] = o.boost.min_node;
        cfg["row_subsample"] = o.boost.row_subsample;
        cfg["col_subsample"] = o.boost.col_subsample;
        cfg["patience"] = o.boost.patience;
    }
    if (kind == sr::ModelKind::frailty && frailty.fix_theta) cfg["theta"] = *frailty.fix_theta;
    model.config = cfg;
    sr::save_model(model, out_path(o.common, "model.json"));
    write_run_config(o.common, cfg);
}

// ----------------------------------------------------------------- evaluate

struct EvaluateOpts {
    CommonOpts common;
    std::string model_path;
    std::string cohort_path;
    std::string locations_path;
    std::string subgroup;
    std::string model_id;
    bool ipcw = false;
    long min_subgroup = 50;
};

sr::SubgroupSpec parse_subgroup(const std::string& text, const std::string& locations_path,
                                const sr::Model& model) {
    sr::SubgroupSpec spec;
    if (text == "ckd") {
        spec.kind = sr::SubgroupKind::ckd;
    } else if (text == "ra") {
        spec.kind = sr::SubgroupKind::ra;
    } else if (text == "location") {
        spec.kind = sr::SubgroupKind::location;
        if (!locations_path.empty())
            spec.locations = sr::load_location_map(locations_path);
        else if (model.has_locations)
            spec.locations = model.locations;
        else
            throw sr::ConfigError("--subgroup location needs --locations or a model with a map");
    } else if (text.rfind("flag:", 0) == 0) {
        spec.kind = sr::SubgroupKind::custom_flag;
        spec.flag_name = text.substr(5);
        if (spec.flag_name.empty()) throw sr::ConfigError("--subgroup flag: needs a covariate name");
    } else {
        throw sr::ConfigError("unknown subgroup kind: " + text +
                              " (expected ckd, ra, location, or flag:<covariate>)");
    }
    return spec;
}

void run_evaluate(EvaluateOpts& o) {
    const sr::Model model = sr::load_model(o.model_path);
    const sr::Cohort cohort = sr::load_cohort(o.cohort_path);
    sr::EvaluateOptions opts;
    opts.horizon_days = o.common.horizon_days;
    opts.thresholds = o.common.thresholds;
    opts.seed = o.common.seed;
    opts.use_ipcw = o.ipcw;
    opts.min_subgroup = o.min_subgroup;
    const std::string model_id = o.model_id.empty() ? sr::model_kind_name(model.kind) : o.model_id;

    std::vector<sr::EvaluationReport> reports;
    if (o.subgroup.empty()) {
        reports.push_back(sr::evaluate_model(model, cohort, opts, model_id));
    } else {
        const sr::SubgroupSpec spec = parse_subgroup(o.subgroup, o.locations_path, model);
        reports = sr::evaluate_subgroups(model, cohort, spec, opts, model_id);
    }

    json cfg;
    cfg["command"] = "evaluate";
    cfg["model_id"] = model_id;
    cfg["subgroup"] = o.subgroup;
    cfg["ipcw"] = o.ipcw;
    cfg["horizon_days"] = o.common.horizon_days;
    cfg["thresholds"] = thresholds_json(o.common.thresholds);
    cfg["seed"] = o.common.seed;
    cfg["min_subgroup"] = o.min_subgroup;
    sr::write_json_file(sr::reports_to_json(reports, cfg), out_path(o.common, "report.json"));
    sr::write_calibration_csv(reports, out_path(o.common, "calibration_bins.csv"));
    sr::write_decision_curve_csv(reports, out_path(o.common, "decision_curve.csv"));
    write_run_config(o.common, cfg);
}

// ---------------------------------------------------------------------- dca

struct DcaOpts {
    CommonOpts common;
    std::string model_path;
    std::string cohort_path;
    std::string grid;  // lo:hi:step expansion overrides --thresholds
};

std::vector<double> expand_grid(const std::string& text) {
    double lo = 0.0, hi = 0.0, step = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':')
        throw sr::ConfigError("--grid expects lo:hi:step, got: " + text);
    if (!(step > 0.0) || !(lo < hi)) throw sr::ConfigError("--grid needs lo < hi and step > 0");
    std::vector<double> out;
    for (double t = lo; t <= hi + 1e-12; t += step) out.push_back(t);
    return out;
}

void run_dca(DcaOpts& o) {
    const sr::Model model = sr::load_model(o.model_path);
    const sr::Cohort cohort = sr::load_cohort(o.cohort_path);
    const std::vector<double> thresholds =
        o.grid.empty() ? o.common.thresholds : expand_grid(o.grid);

    const std::vector<double> predictions =
        sr::predict_risks(model, cohort, o.common.horizon_days);
    const sr::DecisionCurve curve =
        sr::decision_curve(predictions, cohort.follow_up_times(), cohort.event_flags(),
                           o.common.horizon_days, thresholds);

    json cfg;
    cfg["command"] = "dca";
    cfg["horizon_days"] = o.common.horizon_days;
    cfg["thresholds"] = thresholds_json(thresholds);
    json j;
    j["schema_version"] = sr::kReportSchemaVersion;
    j["config"] = cfg;
    j["n"] = cohort.size();
    j["thresholds"] = curve.thresholds;
    j["nb_model"] = curve.nb_model;
    j["nb_treat_all"] = curve.nb_treat_all;
    j["nb_treat_none"] = curve.nb_treat_none;
    sr::write_json_file(j, out_path(o.common, "dca.json"));

    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < curve.thresholds.size(); ++k)
        rows.push_back({"overall", sr::fmt_double(curve.thresholds[k]),
                        sr::fmt_double(curve.nb_model[k]), sr::fmt_double(curve.nb_treat_all[k]),
                        sr::fmt_double(curve.nb_treat_none[k])});
    sr::write_csv(out_path(o.common, "decision_curve.csv"),
                  {"group_id", "threshold", "nb_model", "nb_treat_all", "nb_treat_none"}, rows);
    write_run_config(o.common, cfg);
}

// ------------------------------------------------------------------ compare

struct CompareOpts {
    CommonOpts common;
    std::string baseline_path;
    std::string revised_path;
};

void run_compare(CompareOpts& o) {
    const auto baseline = sr::reports_from_json(sr::read_json_file(o.baseline_path));
    const auto revised = sr::reports_from_json(sr::read_json_file(o.revised_path));
    const sr::ComparisonReport cmp = sr::compare_models(baseline, revised);
    json cfg;
    cfg["command"] = "compare";
    cfg["baseline_id"] = cmp.baseline_id;
    cfg["revised_id"] = cmp.revised_id;
    sr::write_json_file(sr::comparison_to_json(cmp, cfg), out_path(o.common, "comparison.json"));
    sr::write_comparison_csv(cmp, out_path(o.common, "comparison.csv"));
    write_run_config(o.common, cfg);
}

// --------------------------------------------------------------------- tune

struct TuneOpts {
    CommonOpts common;
    std::string train_path;
    std::string locations_path;
    int folds = 5;
    sr::BoostGrid grid;
};

void run_tune(TuneOpts& o) {
    const sr::Cohort train = sr::load_cohort(o.train_path);
    std::optional<sr::LocationMap> locations;
    if (!o.locations_path.empty()) locations = sr::load_location_map(o.locations_path);
    const sr::TuneResult res = sr::tune_boost_hyperparameters(
        train, o.grid, o.folds, o.common.seed, locations ? &*locations : nullptr);

    json cfg;
    cfg["command"] = "tune";
    cfg["folds"] = o.folds;
    cfg["seed"] = o.common.seed;
    cfg["grid"] = {{"max_depth", o.grid.max_depth},
                   {"min_node", o.grid.min_node},
                   {"row_subsample", o.grid.row_subsample},
                   {"col_subsample", o.grid.col_subsample}};
    json j;
    j["schema_version"] = sr::kModelSchemaVersion;
    j["config"] = cfg;
    j["best"] = {{"max_depth", res.config.max_depth},
                 {"min_node", res.config.min_node},
                 {"row_subsample", res.config.row_subsample},
                 {"col_subsample", res.config.col_subsample},
                 {"learning_rate", res.config.learning_rate},
                 {"max_trees", res.config.max_trees}};
    json table = json::array();
    for (const auto& row : res.table)
        table.push_back({{"max_depth", row.max_depth},
                         {"min_node", row.min_node},
                         {"row_subsample", row.row_subsample},
                         {"col_subsample", row.col_subsample},
                         {"mean_valid_loss", row.mean_valid_loss}});
    j["table"] = table;
    sr::write_json_file(j, out_path(o.common, "tune.json"));
    write_run_config(o.common, cfg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"survival risk model toolkit: fit and evaluate ASCVD-style risk equations"};
    app.require_subcommand(1);

    SimulateOpts sim;
    {
        auto* cmd = app.add_subcommand("simulate", "generate a synthetic cohort CSV");
        sim.cmd = cmd;
        add_out(cmd, sim.common);
        cmd->add_option("--seed", sim.common.seed, "simulation seed");
        cmd->add_option("--config", sim.config_path,
                        "key=value simulation config (beta.<cov>, cov.<param> keys supported)");
        cmd->add_option("--n-subjects", sim.n_subjects, "cohort size");
        cmd->add_option("--n-locations", sim.n_locations, "number of zip3 locations");
        cmd->add_option("--frailty-variance", sim.frailty_variance, "location frailty variance");
        cmd->add_option("--weibull-shape", sim.weibull_shape, "baseline Weibull shape");
        cmd->add_option("--weibull-scale-days", sim.weibull_scale_days, "baseline Weibull scale");
        cmd->add_option("--censoring-rate-per-day", sim.censoring_rate_per_day,
                        "exponential censoring rate");
        cmd->add_option("--admin-censor-days", sim.admin_censor_days,
                        "administrative censoring horizon");
        cmd->add_option("--beta", sim.beta_kv, "log-hazard effect as covariate=value (repeatable)");
        cmd->callback([&] { run_simulate(sim); });
    }

    IngestOpts ing;
    {
        auto* cmd = app.add_subcommand("ingest", "validate a cohort CSV and re-emit it");
        add_out(cmd, ing.common);
        cmd->add_option("--input", ing.input, "cohort CSV to read")->required();
        cmd->add_flag("--apply-eligibility", ing.apply_eligibility,
                      "keep only age 40-75, HDL 20-100, total cholesterol 130-320");
        cmd->set_config("--config");
        cmd->callback([&] { run_ingest(ing); });
    }

    MergeOpts mrg;
    {
        auto* cmd = app.add_subcommand("merge-locations",
                                       "group zip3 prefixes until each group meets a minimum size");
        add_out(cmd, mrg.common);
        cmd->add_option("--input", mrg.input, "cohort CSV to read")->required();
        cmd->add_option("--min-size", mrg.min_size, "minimum subjects per group")
            ->check(CLI::PositiveNumber);
        cmd->set_config("--config");
        cmd->callback([&] { run_merge(mrg); });
    }

    SplitOpts spl;
    {
        auto* cmd = app.add_subcommand("split", "seeded train/test split of a cohort CSV");
        add_out(cmd, spl.common);
        cmd->add_option("--input", spl.input, "cohort CSV to read")->required();
        cmd->add_option("--train-fraction", spl.train_fraction, "fraction assigned to training")
            ->check(CLI::Range(std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0)));
        cmd->add_option("--seed", spl.common.seed, "split seed");
        cmd->set_config("--config");
        cmd->callback([&] { run_split(spl); });
    }

    FitOpts fit;
    {
        auto* cmd = app.add_subcommand("fit", "fit a risk model and save it as JSON");
        fit.cmd = cmd;
        add_out(cmd, fit.common);
        cmd->add_option("--train", fit.train_path, "training cohort CSV")->required();
        cmd->add_option("--model", fit.model, "baseline | fixed_effects | frailty | boosted")
            ->required();
        cmd->add_option("--valid", fit.valid_path, "validation cohort CSV (boosted)");
        cmd->add_option("--locations", fit.locations_path, "location map JSON");
        cmd->add_option("--seed", fit.common.seed, "subsampling seed (boosted)");
        cmd->add_option("--max-trees", fit.boost.max_trees, "boosting stage budget");
        cmd->add_option("--learning-rate", fit.boost.learning_rate, "shrinkage");
        cmd->add_option("--max-depth", fit.boost.max_depth, "tree depth limit");
        cmd->add_option("--min-node", fit.boost.min_node, "minimum subjects per tree node");
        cmd->add_option("--row-subsample", fit.boost.row_subsample, "per-stage row fraction");
        cmd->add_option("--col-subsample", fit.boost.col_subsample, "per-stage feature fraction");
        cmd->add_option("--patience", fit.boost.patience, "early-stopping patience in stages");
        cmd->add_option("--theta", fit.fix_theta, "fix the frailty variance instead of profiling");
        cmd->set_config("--config");
        cmd->callback([&] { run_fit(fit); });
    }

    EvaluateOpts ev;
    {
        auto* cmd = app.add_subcommand("evaluate", "score a saved model on a cohort");
        add_common(cmd, ev.common);
        cmd->add_option("--model", ev.model_path, "model JSON")->required();
        cmd->add_option("--cohort", ev.cohort_path, "evaluation cohort CSV")->required();
        cmd->add_option("--subgroup", ev.subgroup, "ckd | ra | location | flag:<covariate>");
        cmd->add_option("--locations", ev.locations_path, "location map JSON for --subgroup location");
        cmd->add_option("--model-id", ev.model_id, "label used in reports");
        cmd->add_flag("--ipcw", ev.ipcw, "censoring-weighted concordance instead of Harrell's");
        cmd->add_option("--min-subgroup", ev.min_subgroup, "subgroups below this are flagged only");
        cmd->callback([&] { run_evaluate(ev); });
    }

    DcaOpts dca;
    {
        auto* cmd = app.add_subcommand("dca", "decision-curve analysis for a saved model");
        add_common(cmd, dca.common);
        cmd->add_option("--model", dca.model_path, "model JSON")->required();
        cmd->add_option("--cohort", dca.cohort_path, "evaluation cohort CSV")->required();
        cmd->add_option("--grid", dca.grid, "threshold grid lo:hi:step (overrides --thresholds)");
        cmd->callback([&] { run_dca(dca); });
    }

    CompareOpts cmpo;
    {
        auto* cmd = app.add_subcommand("compare", "delta metrics between two evaluation reports");
        add_out(cmd, cmpo.common);
        cmd->add_option("--baseline", cmpo.baseline_path, "baseline report.json")->required();
        cmd->add_option("--revised", cmpo.revised_path, "revised report.json")->required();
        cmd->set_config("--config");
        cmd->callback([&] { run_compare(cmpo); });
    }

    TuneOpts tune;
    {
        auto* cmd = app.add_subcommand("tune", "cross-validated boosting hyperparameter search");
        add_out(cmd, tune.common);
        cmd->add_option("--train", tune.train_path, "training cohort CSV")->required();
        cmd->add_option("--locations", tune.locations_path, "location map JSON");
        cmd->add_option("--folds", tune.folds, "cross-validation folds")->check(CLI::PositiveNumber);
        cmd->add_option("--seed", tune.common.seed, "fold and subsampling seed");
        cmd->add_option("--grid-max-depth", tune.grid.max_depth, "depth candidates")->delimiter(',');
        cmd->add_option("--grid-min-node", tune.grid.min_node, "min-node candidates")
            ->delimiter(',');
        cmd->add_option("--grid-row-subsample", tune.grid.row_subsample, "row fraction candidates")
            ->delimiter(',');
        cmd->add_option("--grid-col-subsample", tune.grid.col_subsample,
                        "feature fraction candidates")
            ->delimiter(',');
        cmd->set_config("--config");
        cmd->callback([&] { run_tune(tune); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // help/version exit clean; bad flags are config errors
    } catch (const sr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sr::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const sr::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
