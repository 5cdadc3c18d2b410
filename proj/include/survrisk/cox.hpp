#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "survrisk/design.hpp"
#include "survrisk/error.hpp"
#include "survrisk/step_function.hpp"

namespace survrisk {

// Subjects sorted by follow-up time (descending) with tie blocks, so a single
// forward sweep visits risk sets incrementally. Shared by the Cox fitter, the
// frailty EM and the boosting loss evaluations.
struct SurvivalOrder {
    std::vector<int> index;        // descending time; ties by original index
    std::vector<int> block_start;  // tie block boundaries into index
    std::vector<double> times;
    std::vector<bool> events;
    int n_events = 0;

    SurvivalOrder(std::vector<double> t, std::vector<bool> e)
        : times(std::move(t)), events(std::move(e)) {
        if (times.size() != events.size()) throw DataError("times/events length mismatch");
        if (times.empty()) throw DataError("empty survival data");
        const int n = static_cast<int>(times.size());
        index.resize(static_cast<std::size_t>(n));
        std::iota(index.begin(), index.end(), 0);
        std::sort(index.begin(), index.end(), [&](int a, int b) {
            const double ta = times[static_cast<std::size_t>(a)];
            const double tb = times[static_cast<std::size_t>(b)];
            return ta != tb ? ta > tb : a < b;
        });
        block_start.push_back(0);
        for (int i = 1; i < n; ++i)
            if (times[static_cast<std::size_t>(index[static_cast<std::size_t>(i)])] !=
                times[static_cast<std::size_t>(index[static_cast<std::size_t>(i - 1)])])
                block_start.push_back(i);
        block_start.push_back(n);
        for (bool ev : events) n_events += ev ? 1 : 0;
    }

    int size() const { return static_cast<int>(times.size()); }
};

// Breslow-tie log partial likelihood of a score vector (linear predictor per
// subject). Scores are max-shifted before exponentiation.
inline double cox_loglik_scores(const SurvivalOrder& ord, const std::vector<double>& scores) {
    const int n = ord.size();
    if (static_cast<int>(scores.size()) != n) throw DataError("scores length mismatch");
    const double shift = *std::max_element(scores.begin(), scores.end());
    double loglik = 0.0, s0 = 0.0;
    for (std::size_t b = 0; b + 1 < ord.block_start.size(); ++b) {
        int d = 0;
        double sum_eta = 0.0;
        for (int k = ord.block_start[b]; k < ord.block_start[b + 1]; ++k) {
            const int i = ord.index[static_cast<std::size_t>(k)];
            s0 += std::exp(scores[static_cast<std::size_t>(i)] - shift);
            if (ord.events[static_cast<std::size_t>(i)]) {
                ++d;
                sum_eta += scores[static_cast<std::size_t>(i)];
            }
        }
        if (d > 0) loglik += sum_eta - d * (shift + std::log(s0));
    }
    return loglik;
}

struct CoxOptions {
    double tol = 1e-9;          // relative change in log partial likelihood
    double grad_tol = 1e-8;     // max-norm of the score vector
    int max_iter = 100;
    int max_halvings = 20;
};

struct CoxFit {
    Eigen::VectorXd beta;
    Eigen::MatrixXd covariance;     // inverse observed information at the optimum
    StepFunction baseline_cumhaz;   // Breslow H0(t)
    double log_partial_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> column_names;

    double linear_predictor(const Eigen::VectorXd& x) const {
        if (x.size() != beta.size()) throw DataError("covariate vector dimension mismatch");
        return beta.dot(x);
    }
};

// Non-convergence diagnostic carrying the last iterate.
struct CoxConvergenceError : NumericError {
    CoxFit last_iterate;
    CoxConvergenceError(const std::string& msg, CoxFit fit)
        : NumericError(msg), last_iterate(std::move(fit)) {}
};

namespace detail {

struct CoxDerivatives {
    double loglik = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd information;  // negative Hessian
};

// One sweep over the descending-time order accumulating S0, S1, S2 and the
// per-event-time contributions. eta = X beta + offset. The per-subject
// accumulations are raw loops: expression-template temporaries per subject
// dominate the run time of repeated fits (frailty EM) otherwise.
inline CoxDerivatives cox_derivatives(const Eigen::MatrixXd& X, const SurvivalOrder& ord,
                                      const Eigen::VectorXd& eta, bool want_information) {
    const Eigen::Index p = X.cols();
    CoxDerivatives out;
    out.gradient = Eigen::VectorXd::Zero(p);
    if (want_information) out.information = Eigen::MatrixXd::Zero(p, p);

    const double shift = eta.size() > 0 ? eta.maxCoeff() : 0.0;
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = want_information ? Eigen::MatrixXd::Zero(p, p) : Eigen::MatrixXd();
    Eigen::VectorXd sum_x(p), mean(p);

    for (std::size_t b = 0; b + 1 < ord.block_start.size(); ++b) {
        int d = 0;
        double sum_eta = 0.0;
        sum_x.setZero();
        for (int k = ord.block_start[b]; k < ord.block_start[b + 1]; ++k) {
            const int i = ord.index[static_cast<std::size_t>(k)];
            const double w = std::exp(eta(i) - shift);
            s0 += w;
            const bool ev = ord.events[static_cast<std::size_t>(i)];
            if (ev) {
                ++d;
                sum_eta += eta(i);
            }
            for (Eigen::Index j = 0; j < p; ++j) {
                const double xj = X(i, j);
                s1(j) += w * xj;
                if (ev) sum_x(j) += xj;
                if (want_information) {
                    const double wxj = w * xj;
                    for (Eigen::Index l = 0; l <= j; ++l) s2(j, l) += wxj * X(i, l);
                }
            }
        }
        if (d > 0) {
            out.loglik += sum_eta - d * (shift + std::log(s0));
            for (Eigen::Index j = 0; j < p; ++j) mean(j) = s1(j) / s0;
            for (Eigen::Index j = 0; j < p; ++j) out.gradient(j) += sum_x(j) - d * mean(j);
            if (want_information)
                for (Eigen::Index j = 0; j < p; ++j)
                    for (Eigen::Index l = 0; l <= j; ++l)
                        out.information(j, l) += d * (s2(j, l) / s0 - mean(j) * mean(l));
        }
    }
    if (want_information)
        for (Eigen::Index j = 0; j < p; ++j)
            for (Eigen::Index l = 0; l < j; ++l) out.information(l, j) = out.information(j, l);
    return out;
}

inline std::vector<double> to_scores(const Eigen::VectorXd& eta) {
    return std::vector<double>(eta.data(), eta.data() + eta.size());
}

inline std::string offending_columns(const Eigen::MatrixXd& info,
                                     const std::vector<std::string>& names) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(info);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    const auto perm = qr.colsPermutation().indices();
    std::string out;
    for (Eigen::Index k = rank; k < info.cols(); ++k) {
        if (!out.empty()) out += ", ";
        const auto col = static_cast<std::size_t>(perm(k));
        out += col < names.size() ? names[col] : ("column " + std::to_string(perm(k)));
    }
    return out.empty() ? "unknown" : out;
}

}  // namespace detail

// Breslow estimator of the cumulative baseline hazard at the given scores:
// H0(t) = sum over event times t_k <= t of d_k / sum_{j at risk} exp(eta_j).
inline StepFunction breslow_baseline(const SurvivalOrder& ord, const std::vector<double>& scores) {
    const int n = ord.size();
    if (static_cast<int>(scores.size()) != n) throw DataError("scores length mismatch");
    const double shift = *std::max_element(scores.begin(), scores.end());
    double s0 = 0.0;
    std::vector<double> jump_times, jumps;
    for (std::size_t b = 0; b + 1 < ord.block_start.size(); ++b) {
        int d = 0;
        for (int k = ord.block_start[b]; k < ord.block_start[b + 1]; ++k) {
            const int i = ord.index[static_cast<std::size_t>(k)];
            s0 += std::exp(scores[static_cast<std::size_t>(i)] - shift);
            if (ord.events[static_cast<std::size_t>(i)]) ++d;
        }
        if (d > 0) {
            jump_times.push_back(ord.times[static_cast<std::size_t>(
                ord.index[static_cast<std::size_t>(ord.block_start[b])])]);
            jumps.push_back(d * std::exp(-shift - std::log(s0)));
        }
    }
    // sweep ran in descending time; emit ascending cumulative steps
    StepFunction h0;
    h0.before = 0.0;
    double cum = 0.0;
    for (std::size_t k = jump_times.size(); k-- > 0;) {
        cum += jumps[k];
        h0.times.push_back(jump_times[k]);
        h0.values.push_back(cum);
    }
    return h0;
}

inline StepFunction breslow_baseline(const DesignMatrix& design, const std::vector<double>& times,
                                     const std::vector<bool>& events, const Eigen::VectorXd& beta,
                                     const std::vector<double>* offset = nullptr) {
    SurvivalOrder ord(times, events);
    Eigen::VectorXd eta = design.X * beta;
    std::vector<double> scores(static_cast<std::size_t>(eta.size()));
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        scores[static_cast<std::size_t>(i)] =
            eta(i) + (offset ? (*offset)[static_cast<std::size_t>(i)] : 0.0);
    return breslow_baseline(ord, scores);
}

// Exact Breslow-tie log partial likelihood and its analytic gradient at beta.
inline std::pair<double, Eigen::VectorXd> partial_loglik_and_gradient(
    const DesignMatrix& design, const std::vector<double>& times, const std::vector<bool>& events,
    const Eigen::VectorXd& beta, const std::vector<double>* offset = nullptr) {
    if (beta.size() != design.cols()) throw DataError("beta dimension mismatch");
    SurvivalOrder ord(times, events);
    Eigen::VectorXd eta = design.X * beta;
    if (offset)
        for (Eigen::Index i = 0; i < eta.size(); ++i)
            eta(i) += (*offset)[static_cast<std::size_t>(i)];
    auto d = detail::cox_derivatives(design.X, ord, eta, false);
    return {d.loglik, std::move(d.gradient)};
}

// Newton-Raphson on the Breslow partial likelihood with step halving.
// Convergence: relative log-likelihood change < tol or gradient max-norm
// < grad_tol, whichever happens first.
inline CoxFit fit_cox(const DesignMatrix& design, const std::vector<double>& times,
                      const std::vector<bool>& events, const CoxOptions& options = {},
                      const std::vector<double>* offset = nullptr,
                      const Eigen::VectorXd* beta_start = nullptr,
                      const SurvivalOrder* order = nullptr) {
    // callers that refit repeatedly on fixed data (frailty EM) pass the sort in
    std::optional<SurvivalOrder> local_order;
    if (!order) local_order.emplace(times, events);
    const SurvivalOrder& ord = order ? *order : *local_order;
    if (ord.n_events == 0) throw DataError("cannot fit a Cox model: no events in the data");
    if (design.rows() != static_cast<Eigen::Index>(times.size()))
        throw DataError("design/time length mismatch");
    const Eigen::Index p = design.cols();

    CoxFit fit;
    fit.column_names = design.column_names;
    fit.beta = beta_start ? *beta_start : Eigen::VectorXd::Zero(p);

    auto eta_at = [&](const Eigen::VectorXd& beta) {
        Eigen::VectorXd eta = p > 0 ? Eigen::VectorXd(design.X * beta)
                                    : Eigen::VectorXd::Zero(design.rows());
        if (offset)
            for (Eigen::Index i = 0; i < eta.size(); ++i)
                eta(i) += (*offset)[static_cast<std::size_t>(i)];
        return eta;
    };

    auto current = detail::cox_derivatives(design.X, ord, eta_at(fit.beta), true);
    fit.log_partial_likelihood = current.loglik;

    if (p == 0) {
        fit.converged = true;
    } else {
        {
            // exact collinearity makes the information rank-deficient at every
            // beta; detect it up front so the error can name the columns
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(current.information);
            qr.setThreshold(1e-10);
            if (qr.rank() < p)
                throw NumericError("singular information matrix; offending columns: " +
                                   detail::offending_columns(current.information,
                                                             design.column_names));
        }
        for (int iter = 1; iter <= options.max_iter; ++iter) {
            fit.iterations = iter;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(current.information);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
                throw NumericError("singular information matrix; offending columns: " +
                                   detail::offending_columns(current.information, design.column_names));
            const Eigen::VectorXd step = ldlt.solve(current.gradient);

            double scale = 1.0;
            Eigen::VectorXd beta_new;
            detail::CoxDerivatives next;
            bool improved = false;
            double best_candidate = -std::numeric_limits<double>::infinity();
            for (int h = 0; h <= options.max_halvings; ++h) {
                beta_new = fit.beta + scale * step;
                next = detail::cox_derivatives(design.X, ord, eta_at(beta_new), true);
                if (next.loglik >= current.loglik) {
                    improved = true;
                    break;
                }
                best_candidate = std::max(best_candidate, next.loglik);
                scale *= 0.5;
            }
            if (!improved) {
                // every candidate came out a hair below the current value; when
                // the shortfall is inside the convergence tolerance this is the
                // optimum to within round-off, not a failure
                if (std::isfinite(best_candidate) &&
                    std::abs(best_candidate - current.loglik) <=
                        options.tol * (std::abs(current.loglik) + 1.0))
                    fit.converged = true;
                fit.log_partial_likelihood = current.loglik;
                break;
            }
            const double rel_change =
                std::abs(next.loglik - current.loglik) / (std::abs(current.loglik) + 1.0);
            fit.beta = beta_new;
            current = next;
            fit.log_partial_likelihood = current.loglik;
            if (rel_change < options.tol ||
                current.gradient.cwiseAbs().maxCoeff() < options.grad_tol) {
                fit.converged = true;
                break;
            }
        }
        if (!fit.converged && current.gradient.cwiseAbs().maxCoeff() < options.grad_tol)
            fit.converged = true;

        Eigen::LDLT<Eigen::MatrixXd> ldlt(current.information);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            throw NumericError("singular information matrix; offending columns: " +
                               detail::offending_columns(current.information, design.column_names));
        fit.covariance = ldlt.solve(Eigen::MatrixXd::Identity(p, p));

        if (!fit.converged) {
            fit.baseline_cumhaz = breslow_baseline(ord, detail::to_scores(eta_at(fit.beta)));
            throw CoxConvergenceError(
                "Cox fit did not converge in " + std::to_string(options.max_iter) + " iterations",
                fit);
        }
    }
    if (p == 0) fit.covariance = Eigen::MatrixXd(0, 0);
    fit.baseline_cumhaz = breslow_baseline(ord, detail::to_scores(eta_at(fit.beta)));
    return fit;
}

// Absolute risk at the horizon: 1 - exp(-H0(t) * exp(beta'x)).
inline double predict_risk(const CoxFit& fit, const Eigen::VectorXd& x, double horizon_days) {
    const double h = fit.baseline_cumhaz(horizon_days) * std::exp(fit.linear_predictor(x));
    return 1.0 - std::exp(-h);
}

}  // namespace survrisk
