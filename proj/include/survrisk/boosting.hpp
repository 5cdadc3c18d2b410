#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "survrisk/cox.hpp"
#include "survrisk/error.hpp"
#include "survrisk/rng.hpp"
#include "survrisk/step_function.hpp"
#include "survrisk/tree.hpp"

namespace survrisk {

struct BoostConfig {
    int max_trees = 500;
    double learning_rate = 0.05;
    int max_depth = 3;
    int min_node = 1000;
    double row_subsample = 0.9;
    double col_subsample = 1.0;
    int patience = 20;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_trees < 0) throw ConfigError("max_trees must be >= 0");
        if (!(learning_rate >= 0.0 && learning_rate <= 1.0))
            throw ConfigError("learning_rate must lie in [0,1]");
        if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
        if (min_node < 1) throw ConfigError("min_node must be >= 1");
        if (!(row_subsample > 0.0 && row_subsample <= 1.0))
            throw ConfigError("row_subsample must lie in (0,1]");
        if (!(col_subsample > 0.0 && col_subsample <= 1.0))
            throw ConfigError("col_subsample must lie in (0,1]");
        if (patience < 1) throw ConfigError("patience must be >= 1");
    }
};

struct BoostedStage {
    RegressionTree tree;
    double weight = 0.0;  // line-search weight, before shrinkage
};

struct BoostedModel {
    std::vector<BoostedStage> stages;  // truncated to the best-validation prefix
    int n_stages_used = 0;
    double learning_rate = 0.05;
    StepFunction baseline_cumhaz;
    std::vector<double> train_loss_trace;  // negative log partial likelihood; index = stages applied
    std::vector<double> valid_loss_trace;
    std::vector<std::string> feature_names;

    double score(const Eigen::VectorXd& x) const {
        double f = 0.0;
        for (const auto& stage : stages) f += learning_rate * stage.weight * stage.tree.predict(x);
        return f;
    }
};

// Working response: the gradient of the log partial likelihood in the
// per-subject score, z_i = delta_i - exp(F_i) * H0_F(time_i) with the Breslow
// baseline at the current scores (risk sets inclusive at ties).
inline std::vector<double> working_response(const SurvivalOrder& ord, const std::vector<double>& F) {
    const StepFunction h0 = breslow_baseline(ord, F);
    std::vector<double> z(F.size());
    for (std::size_t i = 0; i < F.size(); ++i)
        z[i] = (ord.events[i] ? 1.0 : 0.0) - std::exp(F[i]) * h0(ord.times[i]);
    return z;
}

inline std::vector<double> working_response(const std::vector<double>& F,
                                            const std::vector<double>& times,
                                            const std::vector<bool>& events) {
    return working_response(SurvivalOrder(times, events), F);
}

struct LineSearchResult {
    double weight = 0.0;
    bool degenerate = false;  // direction was identically zero
};

// Golden-section minimization of the negative log partial likelihood along
// F_prev + w * h over the bracket, to 1e-6 in w. The loss is convex in w.
inline LineSearchResult line_search_weight(const std::vector<double>& F_prev,
                                           const std::vector<double>& h, const SurvivalOrder& ord,
                                           double lo = 0.0, double hi = 10.0, double tol = 1e-6) {
    if (F_prev.size() != h.size()) throw DataError("line search length mismatch");
    bool all_zero = true;
    for (double v : h)
        if (v != 0.0) {
            all_zero = false;
            break;
        }
    if (all_zero) return {0.0, true};

    std::vector<double> scores(F_prev.size());
    auto loss = [&](double w) {
        for (std::size_t i = 0; i < F_prev.size(); ++i) scores[i] = F_prev[i] + w * h[i];
        return -cox_loglik_scores(ord, scores);
    };
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
    double f_c = loss(c), f_d = loss(d);
    while (hi - lo > tol) {
        if (f_c < f_d) {
            hi = d;
            d = c;
            f_d = f_c;
            c = hi - phi * (hi - lo);
            f_c = loss(c);
        } else {
            lo = c;
            c = d;
            f_c = f_d;
            d = lo + phi * (hi - lo);
            f_d = loss(d);
        }
    }
    return {f_c < f_d ? c : d, false};
}

inline LineSearchResult line_search_weight(const std::vector<double>& F_prev,
                                           const std::vector<double>& h,
                                           const std::vector<double>& times,
                                           const std::vector<bool>& events, double lo = 0.0,
                                           double hi = 10.0, double tol = 1e-6) {
    return line_search_weight(F_prev, h, SurvivalOrder(times, events), lo, hi, tol);
}

// Stagewise boosting on the Cox partial likelihood: start from F = 0; each
// stage fits a least-squares tree to the full-sample working response on a
// row/column subsample, line-searches the stage weight on the full sample,
// and applies the shrunken update. Stops once validation loss has not
// improved for `patience` stages and keeps the best-validation prefix.
inline BoostedModel train_boosted(const Eigen::MatrixXd& X_train,
                                  const std::vector<double>& times_train,
                                  const std::vector<bool>& events_train,
                                  const Eigen::MatrixXd& X_valid,
                                  const std::vector<double>& times_valid,
                                  const std::vector<bool>& events_valid, const BoostConfig& config,
                                  std::vector<std::string> feature_names = {}) {
    config.validate();
    const int n = static_cast<int>(times_train.size());
    const int nv = static_cast<int>(times_valid.size());
    const int p = static_cast<int>(X_train.cols());
    if (X_train.rows() != n || X_valid.rows() != nv) throw DataError("feature matrix size mismatch");
    if (X_valid.cols() != p) throw DataError("train/valid feature count mismatch");

    SurvivalOrder ord_train(times_train, events_train);
    SurvivalOrder ord_valid(times_valid, events_valid);
    if (ord_train.n_events == 0 || ord_valid.n_events == 0)
        throw DataError("boosting requires at least one event in train and validation sets");
    const FeatureOrders orders = compute_feature_orders(X_train);

    BoostedModel model;
    model.learning_rate = config.learning_rate;
    model.feature_names = std::move(feature_names);

    std::vector<double> F_train(static_cast<std::size_t>(n), 0.0);
    std::vector<double> F_valid(static_cast<std::size_t>(nv), 0.0);
    std::vector<double> F_best = F_train;
    double train_loss = -cox_loglik_scores(ord_train, F_train);
    double valid_loss = -cox_loglik_scores(ord_valid, F_valid);
    model.train_loss_trace.push_back(train_loss);
    model.valid_loss_trace.push_back(valid_loss);
    double best_valid = valid_loss;
    int best_stage = 0;

    std::vector<BoostedStage> stages;
    const int n_rows = std::max(1, static_cast<int>(std::llround(config.row_subsample * n)));
    const int n_cols = std::max(1, static_cast<int>(std::llround(config.col_subsample * p)));

    for (int m = 1; m <= config.max_trees; ++m) {
        std::vector<int> rows, cols;
        if (n_rows < n) {
            Rng rng(derive_seed(config.seed, 2 * static_cast<std::uint64_t>(m)));
            rows = rng.sample_without_replacement(n, n_rows);
        } else {
            rows.resize(static_cast<std::size_t>(n));
            std::iota(rows.begin(), rows.end(), 0);
        }
        if (n_cols < p) {
            Rng rng(derive_seed(config.seed, 2 * static_cast<std::uint64_t>(m) + 1));
            cols = rng.sample_without_replacement(p, n_cols);
        } else {
            cols.resize(static_cast<std::size_t>(p));
            std::iota(cols.begin(), cols.end(), 0);
        }

        const std::vector<double> z = working_response(ord_train, F_train);
        RegressionTree tree = fit_tree(X_train, z, rows, cols, config.max_depth, config.min_node,
                                       &orders);

        std::vector<double> h_train(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            h_train[static_cast<std::size_t>(i)] = tree.predict(X_train.row(i).transpose());
        LineSearchResult ls = line_search_weight(F_train, h_train, ord_train);
        double w = ls.degenerate ? 0.0 : ls.weight;

        if (w != 0.0) {
            std::vector<double> F_cand(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                F_cand[static_cast<std::size_t>(i)] =
                    F_train[static_cast<std::size_t>(i)] +
                    config.learning_rate * w * h_train[static_cast<std::size_t>(i)];
            const double cand_loss = -cox_loglik_scores(ord_train, F_cand);
            if (cand_loss <= train_loss) {
                F_train = std::move(F_cand);
                train_loss = cand_loss;
                std::vector<double> h_valid(static_cast<std::size_t>(nv));
                for (int i = 0; i < nv; ++i)
                    h_valid[static_cast<std::size_t>(i)] = tree.predict(X_valid.row(i).transpose());
                for (int i = 0; i < nv; ++i)
                    F_valid[static_cast<std::size_t>(i)] +=
                        config.learning_rate * w * h_valid[static_cast<std::size_t>(i)];
                valid_loss = -cox_loglik_scores(ord_valid, F_valid);
            } else {
                w = 0.0;  // numerically useless direction; keep the stage inert
            }
        }
        stages.push_back({std::move(tree), w});
        model.train_loss_trace.push_back(train_loss);
        model.valid_loss_trace.push_back(valid_loss);

        if (valid_loss < best_valid) {
            best_valid = valid_loss;
            best_stage = m;
            F_best = F_train;
        }
        if (m - best_stage >= config.patience) break;
    }

    stages.resize(static_cast<std::size_t>(best_stage));
    model.stages = std::move(stages);
    model.n_stages_used = best_stage;
    model.baseline_cumhaz = breslow_baseline(ord_train, F_best);
    return model;
}

// Absolute risk at the horizon from the boosted score.
inline double predict_risk_boosted(const BoostedModel& model, const Eigen::VectorXd& x,
                                   double horizon_days) {
    return 1.0 - std::exp(-model.baseline_cumhaz(horizon_days) * std::exp(model.score(x)));
}

}  // namespace survrisk
