#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "survrisk/boosting.hpp"
#include "survrisk/cohort.hpp"
#include "survrisk/cox.hpp"
#include "survrisk/design.hpp"
#include "survrisk/error.hpp"
#include "survrisk/frailty.hpp"
#include "survrisk/locations.hpp"

namespace survrisk {

constexpr int kModelSchemaVersion = 1;

enum class ModelKind { baseline, fixed_effects, frailty, boosted };

inline std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::baseline: return "baseline";
        case ModelKind::fixed_effects: return "fixed_effects";
        case ModelKind::frailty: return "frailty";
        case ModelKind::boosted: return "boosted";
    }
    throw ConfigError("unknown model kind");
}

inline ModelKind model_kind_from_name(const std::string& name) {
    if (name == "baseline") return ModelKind::baseline;
    if (name == "fixed_effects") return ModelKind::fixed_effects;
    if (name == "frailty") return ModelKind::frailty;
    if (name == "boosted") return ModelKind::boosted;
    throw ConfigError("unknown model kind: " + name);
}

// age, sex, lipids, and the treated/comorbidity flags of the original score
inline std::vector<std::string> baseline_covariates() {
    return {"age", "sex", "hdl", "total_cholesterol", "hypertension", "diabetes", "smoker",
            "antihypertensive"};
}

// baseline plus the added comorbidities used by the revised equation variants
inline std::vector<std::string> extended_covariates() {
    auto c = baseline_covariates();
    c.push_back("ckd");
    c.push_back("ra");
    return c;
}

// One fitted risk model of any kind, with everything prediction needs.
struct Model {
    ModelKind kind = ModelKind::baseline;
    std::vector<std::string> covariates;
    bool has_locations = false;
    LocationMap locations;
    CoxFit cox;             // baseline / fixed_effects
    FrailtyFit frailty;     // frailty
    BoostedModel boosted;   // boosted
    nlohmann::json config;  // resolved run parameters, carried for reproducibility
};

namespace detail {

inline void require_columns(const std::vector<std::string>& got,
                            const std::vector<std::string>& expected, const char* what) {
    if (got != expected)
        throw DataError(std::string("model/") + what + " column mismatch");
}

}  // namespace detail

// Per-subject log relative hazard (linear predictor or boosted score, with the
// posterior frailty folded in for covered groups).
inline std::vector<double> model_scores(const Model& model, const Cohort& cohort) {
    const std::size_t n = cohort.size();
    std::vector<double> scores(n);
    switch (model.kind) {
        case ModelKind::baseline:
        case ModelKind::fixed_effects: {
            const LocationMap* map =
                model.kind == ModelKind::fixed_effects && model.has_locations ? &model.locations
                                                                              : nullptr;
            const DesignMatrix d = encode_design(cohort, model.covariates, map);
            detail::require_columns(model.cox.column_names, d.column_names, "cohort");
            const Eigen::VectorXd eta = d.X * model.cox.beta;
            for (std::size_t i = 0; i < n; ++i) scores[i] = eta(static_cast<Eigen::Index>(i));
            break;
        }
        case ModelKind::frailty: {
            const DesignMatrix d = encode_design(cohort, model.covariates, nullptr);
            detail::require_columns(model.frailty.column_names, d.column_names, "cohort");
            const Eigen::VectorXd eta = d.X * model.frailty.beta;
            for (std::size_t i = 0; i < n; ++i) {
                const int zip3 = cohort.subjects[i].zip3();
                std::optional<int> group;
                if (model.has_locations && model.locations.covers(zip3))
                    group = model.locations.group_of(zip3);
                scores[i] = eta(static_cast<Eigen::Index>(i)) +
                            std::log(model.frailty.frailty_for_group(group));
            }
            break;
        }
        case ModelKind::boosted: {
            const DesignMatrix f = encode_features(cohort, model.covariates,
                                                   model.has_locations ? &model.locations : nullptr);
            detail::require_columns(model.boosted.feature_names, f.column_names, "cohort");
            for (std::size_t i = 0; i < n; ++i)
                scores[i] = model.boosted.score(f.X.row(static_cast<Eigen::Index>(i)).transpose());
            break;
        }
    }
    return scores;
}

inline const StepFunction& model_baseline_cumhaz(const Model& model) {
    switch (model.kind) {
        case ModelKind::baseline:
        case ModelKind::fixed_effects: return model.cox.baseline_cumhaz;
        case ModelKind::frailty: return model.frailty.baseline_cumhaz;
        case ModelKind::boosted: return model.boosted.baseline_cumhaz;
    }
    throw ConfigError("unknown model kind");
}

// Absolute risks at the horizon for every subject.
inline std::vector<double> predict_risks(const Model& model, const Cohort& cohort,
                                         double horizon_days) {
    std::vector<double> risks = model_scores(model, cohort);
    const double h0 = model_baseline_cumhaz(model)(horizon_days);
    for (double& s : risks) s = 1.0 - std::exp(-h0 * std::exp(s));
    return risks;
}

// Model-expected cumulative hazard of each subject at their own follow-up
// time; feeds the observed/expected and calibration-line metrics.
inline std::vector<double> expected_hazards(const Model& model, const Cohort& cohort) {
    std::vector<double> h = model_scores(model, cohort);
    const StepFunction& h0 = model_baseline_cumhaz(model);
    for (std::size_t i = 0; i < h.size(); ++i)
        h[i] = h0(cohort.subjects[i].follow_up_days) * std::exp(h[i]);
    return h;
}

inline double predict_risk_subject(const Model& model, const Subject& subject,
                                   double horizon_days) {
    Cohort one;
    one.subjects.push_back(subject);
    return predict_risks(model, one, horizon_days).front();
}

// ---------------------------------------------------------------- recipes ---

// Fits one of the four model kinds on a training cohort. `valid` is required
// for the boosted kind (early stopping), `locations` for every kind but
// baseline.
inline Model fit_model(ModelKind kind, const Cohort& train, const Cohort* valid,
                       const LocationMap* locations, const BoostConfig& boost_config = {},
                       const CoxOptions& cox_options = {},
                       const FrailtyOptions& frailty_options = {}) {
    Model model;
    model.kind = kind;
    const std::vector<double> times = train.follow_up_times();
    const std::vector<bool> events = train.event_flags();

    switch (kind) {
        case ModelKind::baseline: {
            model.covariates = baseline_covariates();
            const DesignMatrix d = encode_design(train, model.covariates, nullptr);
            model.cox = fit_cox(d, times, events, cox_options);
            break;
        }
        case ModelKind::fixed_effects: {
            if (!locations) throw ConfigError("fixed_effects model needs a location map");
            model.covariates = extended_covariates();
            model.has_locations = true;
            model.locations = *locations;
            const DesignMatrix d = encode_design(train, model.covariates, locations);
            model.cox = fit_cox(d, times, events, cox_options);
            break;
        }
        case ModelKind::frailty: {
            if (!locations) throw ConfigError("frailty model needs a location map");
            model.covariates = extended_covariates();
            model.has_locations = true;
            model.locations = *locations;
            const DesignMatrix d = encode_design(train, model.covariates, nullptr);
            model.frailty = fit_gamma_frailty(d, times, events, subject_groups(train, *locations),
                                              frailty_options);
            break;
        }
        case ModelKind::boosted: {
            if (!valid) throw ConfigError("boosted model needs a validation cohort");
            if (!locations) throw ConfigError("boosted model needs a location map");
            model.covariates = covariate_names();
            model.has_locations = true;
            model.locations = *locations;
            const DesignMatrix ft = encode_features(train, model.covariates, locations);
            const DesignMatrix fv = encode_features(*valid, model.covariates, locations);
            model.boosted =
                train_boosted(ft.X, times, events, fv.X, valid->follow_up_times(),
                              valid->event_flags(), boost_config, ft.column_names);
            break;
        }
    }
    return model;
}

// ---------------------------------------------------------- serialization ---

namespace detail {

inline nlohmann::json step_to_json(const StepFunction& s) {
    return {{"times", s.times}, {"values", s.values}, {"before", s.before}};
}

inline StepFunction step_from_json(const nlohmann::json& j) {
    StepFunction s;
    s.times = j.at("times").get<std::vector<double>>();
    s.values = j.at("values").get<std::vector<double>>();
    s.before = j.at("before").get<double>();
    return s;
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
    return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
    return v;
}

inline nlohmann::json cox_to_json(const CoxFit& fit) {
    return {{"columns", fit.column_names},
            {"beta", vector_to_json(fit.beta)},
            {"covariance", matrix_to_json(fit.covariance)},
            {"baseline", step_to_json(fit.baseline_cumhaz)},
            {"log_partial_likelihood", fit.log_partial_likelihood},
            {"iterations", fit.iterations},
            {"converged", fit.converged}};
}

inline CoxFit cox_from_json(const nlohmann::json& j) {
    CoxFit fit;
    fit.column_names = j.at("columns").get<std::vector<std::string>>();
    fit.beta = vector_from_json(j.at("beta"));
    fit.covariance = matrix_from_json(j.at("covariance"));
    fit.baseline_cumhaz = step_from_json(j.at("baseline"));
    fit.log_partial_likelihood = j.at("log_partial_likelihood").get<double>();
    fit.iterations = j.at("iterations").get<int>();
    fit.converged = j.at("converged").get<bool>();
    return fit;
}

inline nlohmann::json locations_to_json(const LocationMap& map) {
    nlohmann::json assignments = nlohmann::json::object();
    for (const auto& [zip3, group] : map.assignments) assignments[std::to_string(zip3)] = group;
    nlohmann::json sizes = nlohmann::json::object();
    for (const auto& [group, size] : map.group_sizes) sizes[std::to_string(group)] = size;
    return {{"min_size", map.min_size}, {"assignments", assignments}, {"group_sizes", sizes}};
}

inline LocationMap locations_from_json(const nlohmann::json& j) {
    LocationMap map;
    map.min_size = j.at("min_size").get<int>();
    for (const auto& [key, value] : j.at("assignments").items())
        map.assignments[std::stoi(key)] = value.get<int>();
    for (const auto& [key, value] : j.at("group_sizes").items())
        map.group_sizes[std::stoi(key)] = value.get<int>();
    return map;
}

inline nlohmann::json frailty_to_json(const FrailtyFit& fit) {
    nlohmann::json means = nlohmann::json::object();
    for (const auto& [group, z] : fit.frailty_means) means[std::to_string(group)] = z;
    return {{"columns", fit.column_names},
            {"beta", vector_to_json(fit.beta)},
            {"covariance", matrix_to_json(fit.covariance)},
            {"baseline", step_to_json(fit.baseline_cumhaz)},
            {"theta", fit.theta},
            {"frailty_means", means},
            {"marginal_loglik", fit.marginal_loglik},
            {"converged", fit.converged},
            {"theta_at_boundary", fit.theta_at_boundary}};
}

inline FrailtyFit frailty_from_json(const nlohmann::json& j) {
    FrailtyFit fit;
    fit.column_names = j.at("columns").get<std::vector<std::string>>();
    fit.beta = vector_from_json(j.at("beta"));
    fit.covariance = matrix_from_json(j.at("covariance"));
    fit.baseline_cumhaz = step_from_json(j.at("baseline"));
    fit.theta = j.at("theta").get<double>();
    for (const auto& [key, value] : j.at("frailty_means").items())
        fit.frailty_means[std::stoi(key)] = value.get<double>();
    fit.marginal_loglik = j.at("marginal_loglik").get<double>();
    fit.converged = j.at("converged").get<bool>();
    fit.theta_at_boundary = j.at("theta_at_boundary").get<bool>();
    return fit;
}

inline void tree_nodes_preorder(const RegressionTree& tree, int index, nlohmann::json& out) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    if (node.is_leaf()) {
        out.push_back({{"v", node.value}});
    } else {
        out.push_back({{"f", node.feature}, {"t", node.threshold}});
        tree_nodes_preorder(tree, node.left, out);
        tree_nodes_preorder(tree, node.right, out);
    }
}

inline nlohmann::json tree_to_json(const RegressionTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    tree_nodes_preorder(tree, 0, nodes);
    return nodes;
}

inline int tree_parse_preorder(const nlohmann::json& nodes, std::size_t& cursor,
                               RegressionTree& tree) {
    if (cursor >= nodes.size()) throw DataError("malformed tree serialization");
    const nlohmann::json& j = nodes.at(cursor++);
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    if (j.contains("f")) {
        const int left = tree_parse_preorder(nodes, cursor, tree);
        const int right = tree_parse_preorder(nodes, cursor, tree);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
        node.feature = j.at("f").get<int>();
        node.threshold = j.at("t").get<double>();
        node.left = left;
        node.right = right;
    } else {
        tree.nodes[static_cast<std::size_t>(index)].value = j.at("v").get<double>();
    }
    return index;
}

inline RegressionTree tree_from_json(const nlohmann::json& nodes) {
    RegressionTree tree;
    std::size_t cursor = 0;
    tree_parse_preorder(nodes, cursor, tree);
    if (cursor != nodes.size()) throw DataError("malformed tree serialization");
    return tree;
}

inline nlohmann::json boosted_to_json(const BoostedModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& stage : model.stages) {
        trees.push_back(tree_to_json(stage.tree));
        weights.push_back(stage.weight);
    }
    return {{"trees", trees},
            {"weights", weights},
            {"learning_rate", model.learning_rate},
            {"n_stages_used", model.n_stages_used},
            {"baseline", step_to_json(model.baseline_cumhaz)},
            {"feature_names", model.feature_names},
            {"train_loss", model.train_loss_trace},
            {"valid_loss", model.valid_loss_trace}};
}

inline BoostedModel boosted_from_json(const nlohmann::json& j) {
    BoostedModel model;
    const auto& trees = j.at("trees");
    const auto& weights = j.at("weights");
    if (trees.size() != weights.size()) throw DataError("malformed boosted serialization");
    for (std::size_t i = 0; i < trees.size(); ++i)
        model.stages.push_back({tree_from_json(trees.at(i)), weights.at(i).get<double>()});
    model.learning_rate = j.at("learning_rate").get<double>();
    model.n_stages_used = j.at("n_stages_used").get<int>();
    model.baseline_cumhaz = step_from_json(j.at("baseline"));
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.train_loss_trace = j.at("train_loss").get<std::vector<double>>();
    model.valid_loss_trace = j.at("valid_loss").get<std::vector<double>>();
    return model;
}

}  // namespace detail

inline nlohmann::json model_to_json(const Model& model) {
    nlohmann::json j;
    j["schema_version"] = kModelSchemaVersion;
    j["kind"] = model_kind_name(model.kind);
    j["covariates"] = model.covariates;
    if (!model.config.is_null()) j["config"] = model.config;
    if (model.has_locations) j["locations"] = detail::locations_to_json(model.locations);
    switch (model.kind) {
        case ModelKind::baseline:
        case ModelKind::fixed_effects: j["cox"] = detail::cox_to_json(model.cox); break;
        case ModelKind::frailty: j["frailty"] = detail::frailty_to_json(model.frailty); break;
        case ModelKind::boosted: j["boosted"] = detail::boosted_to_json(model.boosted); break;
    }
    return j;
}

inline Model model_from_json(const nlohmann::json& j) {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kModelSchemaVersion)
        throw DataError("unsupported model schema version");
    Model model;
    model.kind = model_kind_from_name(j.at("kind").get<std::string>());
    model.covariates = j.at("covariates").get<std::vector<std::string>>();
    if (j.contains("config")) model.config = j.at("config");
    if (j.contains("locations")) {
        model.has_locations = true;
        model.locations = detail::locations_from_json(j.at("locations"));
    }
    switch (model.kind) {
        case ModelKind::baseline:
        case ModelKind::fixed_effects: model.cox = detail::cox_from_json(j.at("cox")); break;
        case ModelKind::frailty: model.frailty = detail::frailty_from_json(j.at("frailty")); break;
        case ModelKind::boosted: model.boosted = detail::boosted_from_json(j.at("boosted")); break;
    }
    return model;
}

inline void write_json_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

inline void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << model_to_json(model).dump(2) << "\n";
}

inline Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed model JSON in " + path + ": " + e.what());
    }
    return model_from_json(j);
}

inline void save_location_map(const LocationMap& map, const std::string& path,
                              const nlohmann::json& config = {}) {
    nlohmann::json j;
    j["schema_version"] = kModelSchemaVersion;
    if (!config.is_null()) j["config"] = config;
    j["locations"] = detail::locations_to_json(map);
    write_json_file(j, path);
}

inline LocationMap load_location_map(const std::string& path) {
    const nlohmann::json j = read_json_file(path);
    try {
        if (j.at("schema_version").get<int>() != kModelSchemaVersion)
            throw DataError("unsupported location map schema version");
        return detail::locations_from_json(j.at("locations"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed location map in " + path + ": " + e.what());
    }
}

}  // namespace survrisk
