#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "survrisk/cohort.hpp"
#include "survrisk/error.hpp"
#include "survrisk/locations.hpp"

namespace survrisk {

// Numeric design for the proportional-hazards fitters. Location groups are
// one-hot encoded minus the reference level (the lowest group id), so the
// reference group's effect is absorbed into the baseline hazard.
struct DesignMatrix {
    Eigen::MatrixXd X;
    std::vector<std::string> column_names;
    int location_columns_start = -1;  // first indicator column, -1 when none
    int reference_group = -1;

    Eigen::Index rows() const { return X.rows(); }
    Eigen::Index cols() const { return X.cols(); }
};

inline DesignMatrix encode_design(const Cohort& cohort, const std::vector<std::string>& covariates,
                                  const LocationMap* location_map = nullptr) {
    const Eigen::Index n = static_cast<Eigen::Index>(cohort.size());
    std::vector<int> groups;
    std::vector<int> group_ids;
    Eigen::Index p = static_cast<Eigen::Index>(covariates.size());
    if (location_map) {
        groups = subject_groups(cohort, *location_map);  // throws on uncovered zip3
        group_ids = location_map->group_ids();
        p += static_cast<Eigen::Index>(group_ids.size()) - 1;
    }

    DesignMatrix d;
    d.X.resize(n, p);
    for (std::size_t c = 0; c < covariates.size(); ++c) {
        d.column_names.push_back(covariates[c]);
        for (Eigen::Index i = 0; i < n; ++i)
            d.X(i, static_cast<Eigen::Index>(c)) =
                covariate_value(cohort.subjects[static_cast<std::size_t>(i)], covariates[c]);
    }
    if (location_map) {
        d.location_columns_start = static_cast<int>(covariates.size());
        d.reference_group = group_ids.front();
        for (std::size_t g = 1; g < group_ids.size(); ++g) {
            const Eigen::Index col = static_cast<Eigen::Index>(covariates.size() + g - 1);
            d.column_names.push_back("loc_" + std::to_string(group_ids[g]));
            for (Eigen::Index i = 0; i < n; ++i)
                d.X(i, col) = groups[static_cast<std::size_t>(i)] == group_ids[g] ? 1.0 : 0.0;
        }
    }
    return d;
}

// Feature matrix for the boosted model: raw covariates plus, when a location
// map is given, the group id as an integer-coded column the trees can split on.
inline DesignMatrix encode_features(const Cohort& cohort, const std::vector<std::string>& covariates,
                                    const LocationMap* location_map = nullptr) {
    const Eigen::Index n = static_cast<Eigen::Index>(cohort.size());
    const Eigen::Index p = static_cast<Eigen::Index>(covariates.size()) + (location_map ? 1 : 0);
    DesignMatrix d;
    d.X.resize(n, p);
    for (std::size_t c = 0; c < covariates.size(); ++c) {
        d.column_names.push_back(covariates[c]);
        for (Eigen::Index i = 0; i < n; ++i)
            d.X(i, static_cast<Eigen::Index>(c)) =
                covariate_value(cohort.subjects[static_cast<std::size_t>(i)], covariates[c]);
    }
    if (location_map) {
        const auto groups = subject_groups(cohort, *location_map);
        d.column_names.push_back("location_group");
        for (Eigen::Index i = 0; i < n; ++i)
            d.X(i, p - 1) = static_cast<double>(groups[static_cast<std::size_t>(i)]);
    }
    return d;
}

}  // namespace survrisk
