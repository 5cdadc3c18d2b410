#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "survrisk/cox.hpp"
#include "survrisk/design.hpp"
#include "survrisk/error.hpp"
#include "survrisk/step_function.hpp"

namespace survrisk {

struct FrailtyOptions {
    double theta_lower = 1e-8;
    double theta_upper = 10.0;
    double theta_tol = 1e-6;   // golden-section bracket width
    double em_tol = 1e-6;      // max change in beta and in Z-hat
    // EM is linearly convergent and can need several hundred passes when the
    // grouping carries much of the likelihood; warm-started M-steps keep each
    // pass down to roughly one Newton iteration, so a high cap is cheap
    int em_max_iter = 2000;
    std::optional<double> fix_theta;  // skip the outer search; 0 reduces to plain Cox
    CoxOptions cox;
};

struct FrailtyFit {
    Eigen::VectorXd beta;
    Eigen::MatrixXd covariance;        // from the final M-step, conditional on Z-hat
    double theta = 0.0;                // frailty variance
    std::map<int, double> frailty_means;  // group id -> posterior mean Z-hat
    StepFunction baseline_cumhaz;
    double marginal_loglik = 0.0;
    bool converged = false;
    bool theta_at_boundary = false;
    std::vector<std::string> column_names;
    std::vector<double> em_loglik_trace;  // marginal log-likelihood per EM pass at theta-hat

    double frailty_for_group(const std::optional<int>& group) const {
        if (!group) return 1.0;
        auto it = frailty_means.find(*group);
        return it == frailty_means.end() ? 1.0 : it->second;
    }
};

namespace detail {

// log of the integrated gamma-frailty group term with a = 1/theta:
// log Gamma(a+D) - log Gamma(a) + a log a - (a+D) log(a+A),
// written with exact integer-D products and log1p so a -> infinity is stable.
inline double frailty_group_penalty(double a, int d, double A) {
    double term = 0.0;
    for (int m = 0; m < d; ++m) term += std::log(a + m);
    return term - d * std::log(a) - (a + d) * std::log1p(A / a);
}

struct FrailtyEmState {
    Eigen::VectorXd beta;
    std::vector<double> zhat;      // per group
    CoxFit last_fit;
    std::vector<double> A;         // per-group sum of H0(T) * exp(eta)
    double marginal_loglik = 0.0;
    bool converged = false;
    std::vector<double> loglik_trace;
};

// Sum over events of eta + log(baseline jump), the nonparametric-likelihood
// counterpart of the frailty marginal likelihood's hazard factor.
inline double event_hazard_loglik(const StepFunction& h0, const std::vector<double>& times,
                                  const std::vector<bool>& events, const Eigen::VectorXd& eta) {
    double out = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j)
        if (events[j]) {
            const double jump = h0(times[j]) - h0.left_limit(times[j]);
            out += eta(static_cast<Eigen::Index>(j)) + std::log(jump);
        }
    return out;
}

// EM at fixed theta > 0. E-step: Zhat_g = (1/theta + D_g)/(1/theta + A_g);
// M-step: Cox with offset log Zhat. Warm-startable. The survival order is
// precomputed by the caller; one ascending walk over it per pass yields the
// per-subject cumulative hazards, the per-group A sums and the event part of
// the marginal log-likelihood without any per-subject searches.
//
// value_only: stop as soon as the marginal log-likelihood plateaus. The
// likelihood converges quadratically near the optimum while the parameters
// crawl linearly, so profile *values* for the theta search are ready long
// before the strict parameter tolerance is met. The fit actually returned to
// callers is always re-run with the strict criterion.
inline FrailtyEmState frailty_em(const DesignMatrix& design, const std::vector<double>& times,
                                 const std::vector<bool>& events, const SurvivalOrder& ord,
                                 const std::vector<int>& group_index, int n_groups,
                                 const std::vector<int>& group_events, double theta,
                                 const FrailtyOptions& options, const FrailtyEmState* warm,
                                 bool value_only = false) {
    const std::size_t n = times.size();
    const double a = 1.0 / theta;
    FrailtyEmState st;
    st.beta = warm ? warm->beta : Eigen::VectorXd::Zero(design.cols());
    st.zhat = warm ? warm->zhat : std::vector<double>(static_cast<std::size_t>(n_groups), 1.0);

    std::vector<double> offset(n), zlog(static_cast<std::size_t>(n_groups));
    for (int iter = 0; iter < options.em_max_iter; ++iter) {
        for (int g = 0; g < n_groups; ++g)
            zlog[static_cast<std::size_t>(g)] = std::log(st.zhat[static_cast<std::size_t>(g)]);
        for (std::size_t j = 0; j < n; ++j)
            offset[j] = zlog[static_cast<std::size_t>(group_index[j])];
        CoxFit fit = fit_cox(design, times, events, options.cox, &offset, &st.beta, &ord);

        Eigen::VectorXd eta = design.cols() > 0 ? Eigen::VectorXd(design.X * fit.beta)
                                                : Eigen::VectorXd::Zero(design.rows());
        const StepFunction& h0 = fit.baseline_cumhaz;
        st.A.assign(static_cast<std::size_t>(n_groups), 0.0);
        double event_ll = 0.0;
        double cum = h0.before;
        std::size_t knot = 0;
        // blocks in ascending time; all subjects in a block share one time
        for (std::size_t b = ord.block_start.size() - 1; b-- > 0;) {
            const double t =
                ord.times[static_cast<std::size_t>(ord.index[static_cast<std::size_t>(
                    ord.block_start[b])])];
            double jump = 0.0;
            if (knot < h0.times.size() && h0.times[knot] == t) {
                jump = h0.values[knot] - cum;
                cum = h0.values[knot];
                ++knot;
            }
            for (int k = ord.block_start[b]; k < ord.block_start[b + 1]; ++k) {
                const std::size_t j = static_cast<std::size_t>(ord.index[static_cast<std::size_t>(k)]);
                st.A[static_cast<std::size_t>(group_index[j])] +=
                    cum * std::exp(eta(static_cast<Eigen::Index>(j)));
                if (events[j]) event_ll += eta(static_cast<Eigen::Index>(j)) + std::log(jump);
            }
        }

        double zchange = 0.0;
        for (int g = 0; g < n_groups; ++g) {
            const double znew = (a + group_events[static_cast<std::size_t>(g)]) /
                                (a + st.A[static_cast<std::size_t>(g)]);
            zchange = std::max(zchange, std::abs(znew - st.zhat[static_cast<std::size_t>(g)]));
            st.zhat[static_cast<std::size_t>(g)] = znew;
        }
        const double bchange =
            design.cols() > 0 ? (fit.beta - st.beta).cwiseAbs().maxCoeff() : 0.0;
        st.beta = fit.beta;

        double loglik = event_ll;
        for (int g = 0; g < n_groups; ++g)
            loglik += frailty_group_penalty(a, group_events[static_cast<std::size_t>(g)],
                                            st.A[static_cast<std::size_t>(g)]);
        const double prev_loglik =
            st.loglik_trace.empty() ? -std::numeric_limits<double>::infinity() : st.marginal_loglik;
        st.marginal_loglik = loglik;
        st.loglik_trace.push_back(loglik);
        st.last_fit = std::move(fit);

        if (bchange < options.em_tol && zchange < options.em_tol) {
            st.converged = true;
            break;
        }
        if (value_only &&
            std::abs(loglik - prev_loglik) <= 1e-10 * (std::abs(loglik) + 1.0)) {
            st.converged = true;
            break;
        }
    }
    return st;
}

}  // namespace detail

// Shared gamma-frailty Cox model over groups: EM for (beta, H0, Zhat) at fixed
// theta, profile marginal likelihood maximized over theta by golden section.
inline FrailtyFit fit_gamma_frailty(const DesignMatrix& design, const std::vector<double>& times,
                                    const std::vector<bool>& events, const std::vector<int>& groups,
                                    const FrailtyOptions& options = {}) {
    const std::size_t n = times.size();
    if (groups.size() != n || events.size() != n) throw DataError("groups/times/events length mismatch");
    if (n == 0) throw DataError("empty survival data");

    // dense group indexing, ids kept for reporting
    std::vector<int> ids(groups);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    const int n_groups = static_cast<int>(ids.size());
    std::map<int, int> id_to_index;
    for (int g = 0; g < n_groups; ++g) id_to_index[ids[static_cast<std::size_t>(g)]] = g;
    std::vector<int> group_index(n);
    std::vector<int> group_events(static_cast<std::size_t>(n_groups), 0);
    for (std::size_t j = 0; j < n; ++j) {
        group_index[j] = id_to_index[groups[j]];
        if (events[j]) ++group_events[static_cast<std::size_t>(group_index[j])];
    }

    FrailtyFit out;
    out.column_names = design.column_names;

    if (options.fix_theta && *options.fix_theta == 0.0) {
        // exact reduction: all frailties 1, single plain Cox fit
        CoxFit fit = fit_cox(design, times, events, options.cox);
        Eigen::VectorXd eta = design.cols() > 0 ? Eigen::VectorXd(design.X * fit.beta)
                                                : Eigen::VectorXd::Zero(design.rows());
        std::vector<double> A(static_cast<std::size_t>(n_groups), 0.0);
        for (std::size_t j = 0; j < n; ++j)
            A[static_cast<std::size_t>(group_index[j])] +=
                fit.baseline_cumhaz(times[j]) * std::exp(eta(static_cast<Eigen::Index>(j)));
        double loglik = detail::event_hazard_loglik(fit.baseline_cumhaz, times, events, eta);
        for (int g = 0; g < n_groups; ++g) loglik -= A[static_cast<std::size_t>(g)];  // theta -> 0 limit
        out.beta = fit.beta;
        out.covariance = fit.covariance;
        out.theta = 0.0;
        for (int id : ids) out.frailty_means[id] = 1.0;
        out.baseline_cumhaz = std::move(fit.baseline_cumhaz);
        out.marginal_loglik = loglik;
        out.converged = fit.converged;
        out.em_loglik_trace = {loglik};
        return out;
    }

    // permute subjects into descending-time order once so every risk-set sweep
    // and hazard walk in the EM touches memory sequentially; all EM outputs
    // (beta, per-group Z-hat, baseline, covariance) are order-invariant
    const SurvivalOrder base_order(times, events);
    DesignMatrix dperm;
    dperm.column_names = design.column_names;
    dperm.X.resize(design.rows(), design.cols());
    std::vector<double> times_p(n);
    std::vector<bool> events_p(n);
    std::vector<int> group_index_p(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto j = static_cast<std::size_t>(base_order.index[k]);
        dperm.X.row(static_cast<Eigen::Index>(k)) = design.X.row(static_cast<Eigen::Index>(j));
        times_p[k] = times[j];
        events_p[k] = events[j];
        group_index_p[k] = group_index[j];
    }
    const SurvivalOrder ord(times_p, events_p);

    detail::FrailtyEmState warm;
    bool have_warm = false;
    auto profile = [&](double theta, bool value_only) {
        detail::FrailtyEmState st =
            detail::frailty_em(dperm, times_p, events_p, ord, group_index_p, n_groups,
                               group_events, theta, options, have_warm ? &warm : nullptr,
                               value_only);
        warm = st;
        have_warm = true;
        return st;
    };

    double theta_hat;
    detail::FrailtyEmState best;
    if (options.fix_theta) {
        theta_hat = *options.fix_theta;
        best = profile(theta_hat, false);
    } else {
        // golden-section maximization of the profile marginal log-likelihood;
        // search evaluations only need the profile value, the winning theta is
        // re-run below with the strict parameter criterion
        const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double lo = options.theta_lower, hi = options.theta_upper;
        double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
        double f_c = profile(c, true).marginal_loglik;
        double f_d = profile(d, true).marginal_loglik;
        while (hi - lo > options.theta_tol) {
            if (f_c > f_d) {
                hi = d;
                d = c;
                f_d = f_c;
                c = hi - phi * (hi - lo);
                f_c = profile(c, true).marginal_loglik;
            } else {
                lo = c;
                c = d;
                f_c = f_d;
                d = lo + phi * (hi - lo);
                f_d = profile(d, true).marginal_loglik;
            }
        }
        theta_hat = f_c > f_d ? c : d;
        best = profile(theta_hat, false);
        out.theta_at_boundary = theta_hat <= options.theta_lower + 10 * options.theta_tol ||
                                theta_hat >= options.theta_upper - 10 * options.theta_tol;
    }

    if (!best.converged)
        throw NumericError("gamma-frailty EM did not converge at theta = " +
                           std::to_string(theta_hat));

    out.beta = best.beta;
    out.covariance = best.last_fit.covariance;
    out.theta = theta_hat;
    for (int g = 0; g < n_groups; ++g)
        out.frailty_means[ids[static_cast<std::size_t>(g)]] = best.zhat[static_cast<std::size_t>(g)];
    out.baseline_cumhaz = best.last_fit.baseline_cumhaz;
    out.marginal_loglik = best.marginal_loglik;
    out.converged = true;
    out.em_loglik_trace = std::move(best.loglik_trace);
    return out;
}

// Risk with posterior-mean frailty plug-in for known groups; Z = 1 otherwise.
inline double predict_risk_frailty(const FrailtyFit& fit, const Eigen::VectorXd& x,
                                   const std::optional<int>& group, double horizon_days) {
    if (x.size() != fit.beta.size()) throw DataError("covariate vector dimension mismatch");
    const double z = fit.frailty_for_group(group);
    const double h = z * fit.baseline_cumhaz(horizon_days) * std::exp(fit.beta.dot(x));
    return 1.0 - std::exp(-h);
}

}  // namespace survrisk
