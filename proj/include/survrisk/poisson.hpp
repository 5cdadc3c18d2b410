#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "survrisk/error.hpp"

namespace survrisk {

struct PoissonFit {
    Eigen::VectorXd beta;
    Eigen::MatrixXd covariance;  // inverse Fisher information at the optimum
    double loglik = 0.0;         // up to the log(y!) constant
    int iterations = 0;
    bool converged = false;
};

// Poisson regression with log link by IRLS. X must already contain any
// intercept column. Offset enters the linear predictor additively.
inline PoissonFit poisson_glm(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& offset, double tol = 1e-10,
                              int max_iter = 50) {
    const Eigen::Index n = X.rows(), p = X.cols();
    if (y.size() != n || offset.size() != n) throw DataError("poisson_glm dimension mismatch");
    if (y.sum() <= 0.0) throw DataError("poisson_glm requires some positive counts");

    PoissonFit fit;
    fit.beta = Eigen::VectorXd::Zero(p);
    double prev_loglik = -std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= max_iter; ++iter) {
        fit.iterations = iter;
        const Eigen::VectorXd eta = X * fit.beta + offset;
        const Eigen::VectorXd mu = eta.array().exp();
        fit.loglik = (y.array() * eta.array() - mu.array()).sum();
        if (!std::isfinite(fit.loglik))
            throw NumericError("poisson_glm diverged (non-finite log-likelihood)");

        const Eigen::MatrixXd info = X.transpose() * mu.asDiagonal() * X;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(info);
        qr.setThreshold(1e-10);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (qr.rank() < p || ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
            (info.diagonal().array() <= 0).any())
            throw NumericError("poisson_glm information matrix is singular");
        const Eigen::VectorXd step = ldlt.solve(X.transpose() * (y - mu));
        // guard the rare overshoot: halve until the log-likelihood does not drop
        double scale = 1.0;
        Eigen::VectorXd cand;
        double cand_loglik = 0.0;
        for (int h = 0; h < 30; ++h) {
            cand = fit.beta + scale * step;
            const Eigen::VectorXd eta_c = X * cand + offset;
            cand_loglik = (y.array() * eta_c.array() - eta_c.array().exp()).sum();
            if (std::isfinite(cand_loglik) && cand_loglik >= fit.loglik - 1e-12) break;
            scale *= 0.5;
        }
        fit.beta = cand;
        fit.loglik = cand_loglik;
        if (std::abs(fit.loglik - prev_loglik) / (std::abs(fit.loglik) + 1.0) < tol) {
            fit.converged = true;
            break;
        }
        prev_loglik = fit.loglik;
    }
    if (!fit.converged) throw NumericError("poisson_glm did not converge");
    const Eigen::VectorXd mu = (X * fit.beta + offset).array().exp();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Eigen::MatrixXd(X.transpose() * mu.asDiagonal() * X));
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw NumericError("poisson_glm information matrix is singular at the optimum");
    fit.covariance = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    return fit;
}

struct OeEstimate {
    double oe = std::numeric_limits<double>::quiet_NaN();
    double ci_low = std::numeric_limits<double>::quiet_NaN();
    double ci_high = std::numeric_limits<double>::quiet_NaN();
    long observed = 0;
    double expected = 0.0;
    bool defined = false;
    std::string reason;
};

namespace detail {

inline OeEstimate oe_from_sums(long observed, double expected) {
    OeEstimate e;
    e.observed = observed;
    e.expected = expected;
    if (expected <= 0.0) {
        e.reason = "total expected hazard is zero";
        return e;
    }
    e.defined = true;
    e.oe = static_cast<double>(observed) / expected;
    if (observed > 0) {
        // intercept-only Poisson with offset log H: alpha = log(O/E), var = 1/O
        const double se = 1.0 / std::sqrt(static_cast<double>(observed));
        e.ci_low = std::exp(std::log(e.oe) - 1.96 * se);
        e.ci_high = std::exp(std::log(e.oe) + 1.96 * se);
    } else {
        e.ci_low = 0.0;
        e.ci_high = std::numeric_limits<double>::infinity();
    }
    return e;
}

}  // namespace detail

// Observed/expected event ratio: the exponentiated intercept of a Poisson
// model of the event indicator with offset log(expected hazard), which
// collapses to sum(observed)/sum(expected); CI on the log scale.
inline OeEstimate observed_expected(const std::vector<bool>& events,
                                    const std::vector<double>& expected) {
    if (events.size() != expected.size()) throw DataError("observed_expected length mismatch");
    long observed = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (expected[i] < 0.0) throw DataError("negative expected hazard");
        observed += events[i] ? 1 : 0;
        total += expected[i];
    }
    return detail::oe_from_sums(observed, total);
}

// Joint factor model over groups with no reference level: per-group intercepts
// exponentiate to per-group O/E, mutually orthogonal in the Fisher information.
inline std::map<int, OeEstimate> observed_expected_by_group(const std::vector<bool>& events,
                                                            const std::vector<double>& expected,
                                                            const std::vector<int>& groups) {
    if (events.size() != expected.size() || events.size() != groups.size())
        throw DataError("observed_expected length mismatch");
    std::map<int, std::pair<long, double>> sums;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (expected[i] < 0.0) throw DataError("negative expected hazard");
        auto& s = sums[groups[i]];
        s.first += events[i] ? 1 : 0;
        s.second += expected[i];
    }
    std::map<int, OeEstimate> out;
    for (const auto& [g, s] : sums) out[g] = detail::oe_from_sums(s.first, s.second);
    return out;
}

struct CalibrationLine {
    double intercept = 0.0;
    double intercept_low = 0.0, intercept_high = 0.0;
    double slope = 0.0;
    double slope_low = 0.0, slope_high = 0.0;
    long n_excluded = 0;  // subjects dropped for zero expected hazard
};

// Poisson fit of the event indicator on (1, R); ideal intercept 0, slope 1.
inline CalibrationLine calibration_line(const std::vector<bool>& events,
                                        const std::vector<double>& log_expected) {
    if (events.size() != log_expected.size()) throw DataError("calibration_line length mismatch");
    const Eigen::Index n = static_cast<Eigen::Index>(events.size());
    Eigen::VectorXd y(n), offset = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd X(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(log_expected[static_cast<std::size_t>(i)]))
            throw DataError("calibration_line requires finite log expected hazards");
        y(i) = events[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        X(i, 0) = 1.0;
        X(i, 1) = log_expected[static_cast<std::size_t>(i)];
    }
    const PoissonFit fit = poisson_glm(y, X, offset);
    CalibrationLine line;
    line.intercept = fit.beta(0);
    line.slope = fit.beta(1);
    const double se_a = std::sqrt(fit.covariance(0, 0));
    const double se_b = std::sqrt(fit.covariance(1, 1));
    line.intercept_low = line.intercept - 1.96 * se_a;
    line.intercept_high = line.intercept + 1.96 * se_a;
    line.slope_low = line.slope - 1.96 * se_b;
    line.slope_high = line.slope + 1.96 * se_b;
    return line;
}

// Convenience wrapper on the hazard scale: excludes zero-hazard subjects and
// reports how many were dropped.
inline CalibrationLine calibration_line_from_hazards(const std::vector<bool>& events,
                                                     const std::vector<double>& expected) {
    if (events.size() != expected.size()) throw DataError("calibration_line length mismatch");
    std::vector<bool> ev;
    std::vector<double> logs;
    long excluded = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (expected[i] > 0.0) {
            ev.push_back(events[i]);
            logs.push_back(std::log(expected[i]));
        } else {
            ++excluded;
        }
    }
    if (ev.empty()) throw DataError("calibration_line: all expected hazards are zero");
    CalibrationLine line = calibration_line(ev, logs);
    line.n_excluded = excluded;
    return line;
}

}  // namespace survrisk
