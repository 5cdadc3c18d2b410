#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <tuple>
#include <vector>

#include "survrisk/boosting.hpp"
#include "survrisk/design.hpp"
#include "survrisk/error.hpp"
#include "survrisk/model.hpp"
#include "survrisk/rng.hpp"

namespace survrisk {

// Axes of the boosting hyperparameter grid; the cross product is searched.
struct BoostGrid {
    std::vector<int> max_depth = {3};
    std::vector<int> min_node = {1000};
    std::vector<double> row_subsample = {0.9};
    std::vector<double> col_subsample = {1.0};
};

struct TuneCandidateScore {
    int max_depth = 0;
    int min_node = 0;
    double row_subsample = 0.0;
    double col_subsample = 0.0;
    double mean_valid_loss = 0.0;
};

struct TuneResult {
    BoostConfig config;  // winning candidate with the final-fit rate/stage budget
    std::vector<TuneCandidateScore> table;
};

// Grid search by k-fold cross-validation: candidates are scored with a
// 0.1/100-stage run (mean best validation negative log partial likelihood
// across folds), the winner is returned with the 0.05/500 production budget.
// Folds and subsampling draws are shared across candidates so identical
// candidates score identically; ties go to the lexicographically first
// (max_depth, min_node, row_subsample, col_subsample) tuple.
inline TuneResult tune_boost_hyperparameters(const Cohort& train, const BoostGrid& grid,
                                             int folds = 5, std::uint64_t seed = 0,
                                             const LocationMap* locations = nullptr) {
    if (grid.max_depth.empty() || grid.min_node.empty() || grid.row_subsample.empty() ||
        grid.col_subsample.empty())
        throw ConfigError("hyperparameter grid must be non-empty on every axis");
    if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
    if (static_cast<std::size_t>(folds) > train.size())
        throw ConfigError("more folds than subjects");

    using Candidate = std::tuple<int, int, double, double>;
    std::vector<Candidate> candidates;
    for (int d : grid.max_depth)
        for (int m : grid.min_node)
            for (double r : grid.row_subsample)
                for (double c : grid.col_subsample) candidates.emplace_back(d, m, r, c);
    std::sort(candidates.begin(), candidates.end());

    const DesignMatrix design = encode_features(train, extended_covariates(), locations);
    const std::vector<double> times = train.follow_up_times();
    const std::vector<bool> events = train.event_flags();

    std::vector<int> fold_of(train.size());
    {
        std::vector<std::size_t> order(train.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(seed, 0));
        rng.shuffle(order);
        for (std::size_t j = 0; j < order.size(); ++j)
            fold_of[order[j]] = static_cast<int>(j % static_cast<std::size_t>(folds));
    }

    TuneResult result;
    double best_score = 0.0;
    bool have_best = false;
    Candidate best_candidate{};
    for (const Candidate& cand : candidates) {
        BoostConfig cfg;
        std::tie(cfg.max_depth, cfg.min_node, cfg.row_subsample, cfg.col_subsample) = cand;
        cfg.learning_rate = 0.1;
        cfg.max_trees = 100;

        double total = 0.0;
        for (int f = 0; f < folds; ++f) {
            std::vector<Eigen::Index> fit_rows, valid_rows;
            for (std::size_t i = 0; i < train.size(); ++i)
                (fold_of[i] == f ? valid_rows : fit_rows).push_back(static_cast<Eigen::Index>(i));

            auto slice = [&](const std::vector<Eigen::Index>& rows, Eigen::MatrixXd& X,
                             std::vector<double>& t, std::vector<bool>& e) {
                X.resize(static_cast<Eigen::Index>(rows.size()), design.X.cols());
                for (std::size_t k = 0; k < rows.size(); ++k) {
                    X.row(static_cast<Eigen::Index>(k)) = design.X.row(rows[k]);
                    t.push_back(times[static_cast<std::size_t>(rows[k])]);
                    e.push_back(events[static_cast<std::size_t>(rows[k])]);
                }
            };
            Eigen::MatrixXd X_fit, X_valid;
            std::vector<double> t_fit, t_valid;
            std::vector<bool> e_fit, e_valid;
            slice(fit_rows, X_fit, t_fit, e_fit);
            slice(valid_rows, X_valid, t_valid, e_valid);

            // Same seed for every candidate in a fold: common random numbers.
            cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(f) + 1);
            const BoostedModel m = train_boosted(X_fit, t_fit, e_fit, X_valid, t_valid, e_valid,
                                                 cfg, design.column_names);
            total += *std::min_element(m.valid_loss_trace.begin(), m.valid_loss_trace.end());
        }
        const double score = total / static_cast<double>(folds);
        result.table.push_back({std::get<0>(cand), std::get<1>(cand), std::get<2>(cand),
                                std::get<3>(cand), score});
        if (!have_best || score < best_score) {
            best_score = score;
            best_candidate = cand;
            have_best = true;
        }
    }

    std::tie(result.config.max_depth, result.config.min_node, result.config.row_subsample,
             result.config.col_subsample) = best_candidate;
    result.config.learning_rate = 0.05;
    result.config.max_trees = 500;
    result.config.seed = seed;
    return result;
}

}  // namespace survrisk
