#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "helpers.hpp"
#include "survrisk/calibration.hpp"
#include "survrisk/concordance.hpp"
#include "survrisk/kaplan_meier.hpp"
#include "survrisk/net_benefit.hpp"
#include "survrisk/poisson.hpp"
#include "survrisk/rng.hpp"

using namespace survrisk;
using Catch::Approx;

namespace {
const ConcordanceOptions kNoCi = [] {
    ConcordanceOptions o;
    o.with_ci = false;
    return o;
}();
}  // namespace

TEST_CASE("concordance hand examples", "[concordance]") {
    const std::vector<double> times = {1, 2, 3};
    const std::vector<bool> events = {true, true, false};

    SECTION("perfect ordering") {
        const auto r = harrell_c({0.9, 0.5, 0.1}, times, events, 5.0, kNoCi);
        CHECK(r.estimate == 1.0);
        CHECK(r.n_usable_pairs == 3);
    }
    SECTION("one inversion") {
        const auto r = harrell_c({0.5, 0.9, 0.1}, times, events, 5.0, kNoCi);
        CHECK(r.estimate == Approx(2.0 / 3.0).epsilon(1e-15));
    }
    SECTION("horizon truncation removes late events from the usable set") {
        const auto r = harrell_c({0.9, 0.5, 0.1}, times, events, 1.5, kNoCi);
        CHECK(r.n_usable_pairs == 2);  // only the t=1 event anchors pairs
        CHECK(r.estimate == 1.0);
    }
    SECTION("tied predictions score zero by default, half optionally") {
        const auto strict = harrell_c({0.4, 0.4, 0.4}, times, events, 5.0, kNoCi);
        CHECK(strict.estimate == 0.0);
        ConcordanceOptions half = kNoCi;
        half.ties_half = true;
        const auto soft = harrell_c({0.4, 0.4, 0.4}, times, events, 5.0, half);
        CHECK(soft.estimate == 0.5);
    }
    SECTION("undefined without any usable pair") {
        CHECK_THROWS_AS(harrell_c({0.1, 0.2}, {5, 6}, {false, false}, 10.0, kNoCi), DataError);
        // single subject cannot form a pair either
        CHECK_THROWS_AS(harrell_c({0.1}, {5}, {true}, 10.0, kNoCi), DataError);
    }
    SECTION("input validation") {
        CHECK_THROWS_AS(harrell_c({0.1, 0.2}, {1.0, 2.0, 3.0}, {true, false}, 5.0, kNoCi),
                        DataError);
        CHECK_THROWS_AS(harrell_c({0.1, 0.2}, {1.0, 2.0}, {true, false}, 0.0, kNoCi), DataError);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(harrell_c({nan, 0.2}, {1.0, 2.0}, {true, false}, 5.0, kNoCi), DataError);
    }
}

TEST_CASE("concordance agrees exactly with the quadratic brute force", "[concordance]") {
    Rng rng(2024);
    for (int rep = 0; rep < 40; ++rep) {
        const int n = static_cast<int>(rng.uniform_int(2, 120));
        std::vector<double> preds, times;
        std::vector<bool> events;
        bool usable_possible = false;
        for (int i = 0; i < n; ++i) {
            // coarse grids force ties in both predictions and times
            preds.push_back(static_cast<double>(rng.uniform_int(0, 8)) / 8.0);
            times.push_back(static_cast<double>(rng.uniform_int(1, 12)));
            events.push_back(rng.bernoulli(0.6));
        }
        const double horizon = static_cast<double>(rng.uniform_int(3, 12));
        for (int i = 0; i < n && !usable_possible; ++i)
            for (int j = 0; j < n; ++j)
                if (events[static_cast<std::size_t>(i)] &&
                    times[static_cast<std::size_t>(i)] <= horizon &&
                    times[static_cast<std::size_t>(i)] < times[static_cast<std::size_t>(j)]) {
                    usable_possible = true;
                    break;
                }
        const bool ties_half = rep % 2 == 1;
        const auto brute = testutil::brute_force_c(preds, times, events, horizon, ties_half);
        ConcordanceOptions opt = kNoCi;
        opt.ties_half = ties_half;
        if (!usable_possible) {
            CHECK_THROWS_AS(harrell_c(preds, times, events, horizon, opt), DataError);
            continue;
        }
        const auto fast = harrell_c(preds, times, events, horizon, opt);
        CHECK(fast.n_usable_pairs == brute.usable);
        CHECK(fast.estimate == brute.concordant / static_cast<double>(brute.usable));
    }
}

TEST_CASE("concordance is invariant under monotone transforms", "[concordance]") {
    Rng rng(5);
    std::vector<double> preds, times;
    std::vector<bool> events;
    for (int i = 0; i < 80; ++i) {
        preds.push_back(rng.uniform01());
        times.push_back(rng.exponential(0.01));
        events.push_back(rng.bernoulli(0.7));
    }
    const auto base = harrell_c(preds, times, events, 150.0, kNoCi);
    std::vector<double> mapped;
    for (double p : preds) mapped.push_back(std::exp(3.0 * p) - 2.0);
    const auto trans = harrell_c(mapped, times, events, 150.0, kNoCi);
    CHECK(base.estimate == trans.estimate);
    CHECK(base.n_usable_pairs == trans.n_usable_pairs);
}

TEST_CASE("ipcw concordance reduces to Harrell's under no censoring", "[concordance]") {
    Rng rng(8);
    std::vector<double> preds, times;
    std::vector<bool> events;
    for (int i = 0; i < 60; ++i) {
        preds.push_back(rng.uniform01());
        times.push_back(rng.exponential(0.005));
        events.push_back(true);
    }
    const auto h = harrell_c(preds, times, events, 400.0, kNoCi);
    const auto g = censoring_survival(times, events);
    const auto w = ipcw_c(preds, times, events, 400.0, g, kNoCi);
    CHECK(w.estimate == h.estimate);
    CHECK(w.n_usable_pairs == h.n_usable_pairs);
    CHECK(w.n_dropped_pairs == 0);
}

TEST_CASE("ipcw weighting drops pairs with zero censoring survival", "[concordance]") {
    // external censor curve that dies at t=2: later events carry infinite weight
    KaplanMeierCurve g;
    g.event_times = {2.0};
    g.survival = {0.0};
    g.greenwood_variance = {0.0};
    g.at_risk = {4};
    g.deaths = {4};

    const std::vector<double> preds = {0.9, 0.6, 0.3, 0.1};
    const std::vector<double> times = {1, 3, 4, 5};
    const std::vector<bool> events = {true, true, false, false};
    const auto r = ipcw_c(preds, times, events, 10.0, g, kNoCi);
    // the t=3 event's two pairs are dropped; the t=1 event keeps its three
    CHECK(r.n_dropped_pairs == 2);
    CHECK(r.n_usable_pairs == 3);
    CHECK(r.estimate == 1.0);
}

TEST_CASE("bootstrap intervals are seeded and contain the estimate", "[concordance]") {
    Rng rng(31);
    std::vector<double> preds, times;
    std::vector<bool> events;
    for (int i = 0; i < 50; ++i) {
        const double x = rng.normal();
        preds.push_back(x);
        times.push_back(rng.exponential(std::exp(0.8 * x) / 100.0));
        events.push_back(rng.bernoulli(0.8));
    }
    ConcordanceOptions opt;
    opt.seed = 42;
    opt.bootstrap_reps = 100;
    const auto a = harrell_c(preds, times, events, 200.0, opt);
    const auto b = harrell_c(preds, times, events, 200.0, opt);
    CHECK(a.ci_low == b.ci_low);
    CHECK(a.ci_high == b.ci_high);
    CHECK(a.ci_low <= a.estimate);
    CHECK(a.ci_high >= a.estimate);
    CHECK(a.ci_low < a.ci_high);

    ConcordanceOptions opt2 = opt;
    opt2.seed = 43;
    const auto c = harrell_c(preds, times, events, 200.0, opt2);
    CHECK((c.ci_low != a.ci_low || c.ci_high != a.ci_high));
}

TEST_CASE("poisson regression closed forms", "[poisson]") {
    SECTION("intercept-only is the log mean") {
        Eigen::VectorXd y(6);
        y << 0, 1, 2, 3, 4, 5;
        Eigen::MatrixXd X = Eigen::MatrixXd::Ones(6, 1);
        const PoissonFit fit = poisson_glm(y, X, Eigen::VectorXd::Zero(6));
        REQUIRE(fit.converged);
        CHECK(fit.beta(0) == Approx(std::log(2.5)).margin(1e-10));
        CHECK(fit.covariance(0, 0) == Approx(1.0 / 15.0).margin(1e-10));
    }
    SECTION("offsets shift the closed form") {
        Eigen::VectorXd y(4), off(4);
        y << 1, 0, 2, 1;
        off << 0.5, -0.3, 0.2, 0.0;
        Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 1);
        const PoissonFit fit = poisson_glm(y, X, off);
        REQUIRE(fit.converged);
        const double denom = std::exp(0.5) + std::exp(-0.3) + std::exp(0.2) + 1.0;
        CHECK(fit.beta(0) == Approx(std::log(4.0 / denom)).margin(1e-10));
    }
    SECTION("matches an independently computed three-column fit") {
        Eigen::VectorXd y(6), off(6);
        y << 0, 1, 0, 2, 1, 3;
        off << 0.1, -0.2, 0, 0.3, 0, -0.1;
        Eigen::MatrixXd X(6, 3);
        X << 1, 0.5, 1, 1, -1.2, 0, 1, 0.3, 1, 1, 2.0, 0, 1, -0.7, 1, 1, 1.5, 0;
        const PoissonFit fit = poisson_glm(y, X, off);
        REQUIRE(fit.converged);
        CHECK(fit.beta(0) == Approx(0.61541581407331858).margin(1e-8));
        CHECK(fit.beta(1) == Approx(0.051222169982659528).margin(1e-8));
        CHECK(fit.beta(2) == Approx(-1.7513579638231731).margin(1e-8));
        CHECK(fit.covariance(0, 0) == Approx(0.2815209227011144).margin(1e-7));
        CHECK(fit.covariance(1, 1) == Approx(0.096759580383587715).margin(1e-7));
        CHECK(fit.covariance(2, 2) == Approx(1.2686200953454387).margin(1e-7));
    }
    SECTION("all-zero counts are rejected") {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
        Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 1);
        CHECK_THROWS_AS(poisson_glm(y, X, Eigen::VectorXd::Zero(4)), DataError);
    }
}

TEST_CASE("observed/expected ratio", "[oe]") {
    SECTION("unit ratio hand case") {
        const auto e = observed_expected({true, false, true}, {0.5, 0.5, 1.0});
        REQUIRE(e.defined);
        CHECK(e.oe == Approx(1.0).epsilon(1e-15));
        CHECK(e.observed == 2);
        CHECK(e.expected == Approx(2.0));
        CHECK(e.ci_low == Approx(std::exp(-1.96 / std::sqrt(2.0))).margin(1e-12));
        CHECK(e.ci_high == Approx(std::exp(1.96 / std::sqrt(2.0))).margin(1e-12));
    }
    SECTION("doubling expectations halves the ratio") {
        const std::vector<bool> ev = {true, false, true, true};
        const std::vector<double> h = {0.2, 0.4, 0.9, 0.3};
        std::vector<double> h2;
        for (double v : h) h2.push_back(2.0 * v);
        CHECK(observed_expected(ev, h2).oe == Approx(observed_expected(ev, h).oe / 2.0));
    }
    SECTION("zero observed events stays defined with a one-sided interval") {
        const auto e = observed_expected({false, false}, {0.3, 0.2});
        REQUIRE(e.defined);
        CHECK(e.oe == 0.0);
        CHECK(e.ci_low == 0.0);
        CHECK(std::isinf(e.ci_high));
    }
    SECTION("zero total expectation is flagged undefined") {
        const auto e = observed_expected({true, false}, {0.0, 0.0});
        CHECK_FALSE(e.defined);
        CHECK_FALSE(e.reason.empty());
    }
    SECTION("negative expectations are rejected") {
        CHECK_THROWS_AS(observed_expected({true}, {-0.1}), DataError);
    }
    SECTION("closed form agrees with the offset Poisson intercept") {
        const std::vector<bool> ev = {true, false, true, true, false};
        const std::vector<double> h = {0.2, 0.3, 0.5, 0.8, 0.4};
        const auto e = observed_expected(ev, h);

        Eigen::VectorXd y(5), off(5);
        for (int i = 0; i < 5; ++i) {
            y(i) = ev[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
            off(i) = std::log(h[static_cast<std::size_t>(i)]);
        }
        const PoissonFit fit = poisson_glm(y, Eigen::MatrixXd::Ones(5, 1), off);
        REQUIRE(fit.converged);
        CHECK(e.oe == Approx(std::exp(fit.beta(0))).margin(1e-9));
        const double se = std::sqrt(fit.covariance(0, 0));
        CHECK(se == Approx(1.0 / std::sqrt(3.0)).margin(1e-8));
        CHECK(e.ci_low == Approx(std::exp(fit.beta(0) - 1.96 * se)).margin(1e-8));
        CHECK(e.ci_high == Approx(std::exp(fit.beta(0) + 1.96 * se)).margin(1e-8));
    }
    SECTION("per-group ratios match per-group closed forms") {
        const std::vector<bool> ev = {true, false, true, true, false, false};
        const std::vector<double> h = {0.2, 0.3, 0.5, 0.8, 0.4, 0.1};
        const std::vector<int> groups = {7, 7, 7, 9, 9, 9};
        const auto by = observed_expected_by_group(ev, h, groups);
        REQUIRE(by.size() == 2);
        CHECK(by.at(7).oe == Approx(2.0 / 1.0).epsilon(1e-12));
        CHECK(by.at(9).oe == Approx(1.0 / 1.3).epsilon(1e-12));
    }
}

TEST_CASE("calibration line", "[calibration]") {
    SECTION("a self-consistent construction recovers intercept 0 and slope 1") {
        // groups engineered so both score equations vanish exactly at (0, 1)
        std::vector<bool> ev;
        std::vector<double> h;
        for (int i = 0; i < 4; ++i) {
            ev.push_back(i < 2);
            h.push_back(0.5);
        }
        for (int i = 0; i < 4; ++i) {
            ev.push_back(i < 1);
            h.push_back(0.25);
        }
        std::vector<double> logs;
        for (double v : h) logs.push_back(std::log(v));
        const CalibrationLine line = calibration_line(ev, logs);
        CHECK(line.intercept == Approx(0.0).margin(1e-9));
        CHECK(line.slope == Approx(1.0).margin(1e-9));
        CHECK(line.intercept_low < 0.0);
        CHECK(line.intercept_high > 0.0);
        CHECK(line.slope_low < 1.0);
        CHECK(line.slope_high > 1.0);
    }
    SECTION("shifting the log hazards moves only the intercept") {
        Rng rng(14);
        std::vector<bool> ev;
        std::vector<double> logs;
        for (int i = 0; i < 60; ++i) {
            logs.push_back(rng.uniform(-4.0, -1.0));
            ev.push_back(rng.bernoulli(std::exp(logs.back())));
        }
        ev[0] = true;
        const CalibrationLine base = calibration_line(ev, logs);
        std::vector<double> shifted;
        for (double r : logs) shifted.push_back(r + 0.8);
        const CalibrationLine moved = calibration_line(ev, shifted);
        CHECK(moved.slope == Approx(base.slope).margin(1e-8));
        CHECK(moved.intercept == Approx(base.intercept - 0.8 * base.slope).margin(1e-8));
    }
    SECTION("constant hazards leave the slope unidentifiable") {
        const std::vector<bool> ev = {true, false, true, false};
        const std::vector<double> logs(4, std::log(0.5));
        CHECK_THROWS_AS(calibration_line(ev, logs), NumericError);
    }
    SECTION("hazard-scale wrapper excludes zero-hazard subjects") {
        const std::vector<bool> ev = {true, false, true, false, true, false};
        const std::vector<double> h = {0.5, 0.0, 0.25, 0.5, 0.0, 0.25};
        const CalibrationLine line = calibration_line_from_hazards(ev, h);
        CHECK(line.n_excluded == 2);
        CHECK_THROWS_AS(calibration_line_from_hazards({true, false}, {0.0, 0.0}), DataError);
    }
}

TEST_CASE("chi-square upper tail against frozen references", "[calibration]") {
    CHECK(chi_square_upper_tail(3.841458820694124, 1) == Approx(0.05).margin(1e-12));
    CHECK(chi_square_upper_tail(16.918977604620448, 9) == Approx(0.05).margin(1e-12));
    CHECK(chi_square_upper_tail(2.0, 4) == Approx(0.7357588823428847).margin(1e-12));
    CHECK(chi_square_upper_tail(10.0, 3) == Approx(0.01856613546304325).margin(1e-12));
    CHECK(chi_square_upper_tail(0.5, 1) == Approx(0.47950012218695337).margin(1e-12));
    CHECK(chi_square_upper_tail(25.0, 10) == Approx(0.005345505487134069).margin(1e-12));
    CHECK(chi_square_upper_tail(0.0, 3) == 1.0);
}

TEST_CASE("default calibration bin count", "[calibration]") {
    CHECK(default_bin_count(1000) == 10);
    CHECK(default_bin_count(8) == 2);
    CHECK(default_bin_count(27) == 3);
    CHECK(default_bin_count(9) == 2);
    CHECK(default_bin_count(8000) == 20);
    CHECK(default_bin_count(125000) == 50);
}

TEST_CASE("calibration plot data", "[calibration]") {
    SECTION("single bin reproduces whole-sample statistics") {
        const std::vector<double> preds = {0.1, 0.2, 0.3, 0.4};
        const std::vector<double> times = {50, 120, 300, 400};
        const std::vector<bool> events = {true, false, true, false};
        const auto cal = calibration_plot_data(preds, times, events, 365.0, 1);
        REQUIRE(cal.bins.size() == 1);
        CHECK(cal.bins[0].count == 4);
        CHECK(cal.bins[0].mean_predicted == Approx(0.25));
        const auto km = kaplan_meier(times, events);
        CHECK(cal.bins[0].observed_risk == Approx(1.0 - km.survival_at(365.0)));
        CHECK(cal.bins[0].events_by_horizon == 2);
    }
    SECTION("bins split at prediction quantiles with hand-checkable intervals") {
        // low-risk half: no events; high-risk half: events at 10 and 20
        const std::vector<double> preds = {0.01, 0.02, 0.03, 0.04, 0.6, 0.7, 0.8, 0.9};
        const std::vector<double> times = {500, 500, 500, 500, 10, 20, 500, 500};
        const std::vector<bool> events = {false, false, false, false, true, true, false, false};
        const auto cal = calibration_plot_data(preds, times, events, 365.0, 2);
        REQUIRE(cal.bins.size() == 2);
        CHECK(cal.bins[0].count == 4);
        CHECK(cal.bins[0].events_by_horizon == 0);
        CHECK(cal.bins[0].observed_risk == 0.0);
        CHECK(cal.bins[0].variance == 0.0);
        CHECK(cal.bins[0].ci_low == 0.0);  // clipped at zero
        CHECK(cal.bins[0].ci_high == 0.0);

        // bin 2: KM = (3/4)(2/3) = 1/2, Greenwood = S^2 (1/12 + 1/6)
        const double s = 0.5, var = s * s * (1.0 / 12.0 + 1.0 / 6.0);
        CHECK(cal.bins[1].observed_risk == Approx(0.5).epsilon(1e-12));
        CHECK(cal.bins[1].variance == Approx(var).epsilon(1e-12));
        CHECK(cal.bins[1].ci_low == Approx(0.5 - 1.96 * std::sqrt(var)).epsilon(1e-12));
        CHECK(cal.bins[1].ci_high == Approx(0.5 + 1.96 * std::sqrt(var)).epsilon(1e-12));
        CHECK(cal.bins[1].mean_predicted == Approx(0.75));
    }
    SECTION("tied predictions never straddle bins") {
        const std::vector<double> preds = {0.2, 0.2, 0.2, 0.2, 0.2, 0.9};
        const std::vector<double> times = {10, 20, 30, 40, 50, 60};
        const std::vector<bool> events = {true, true, true, true, true, true};
        const auto cal = calibration_plot_data(preds, times, events, 100.0, 2);
        REQUIRE(cal.bins.size() == 2);
        CHECK(cal.bins[0].count == 5);
        CHECK(cal.bins[1].count == 1);
    }
}

TEST_CASE("calibration chi-square test", "[gnd]") {
    SECTION("exact agreement between prediction and bin outcome gives zero") {
        std::vector<double> preds, times;
        std::vector<bool> events;
        // bin A: 12 subjects at 5/12 risk, 5 events; bin B: 12 at 3/4 risk, 9 events
        for (int i = 0; i < 12; ++i) {
            preds.push_back(5.0 / 12.0);
            if (i < 5) {
                times.push_back(static_cast<double>(i + 1));
                events.push_back(true);
            } else {
                times.push_back(1000.0);
                events.push_back(false);
            }
        }
        for (int i = 0; i < 12; ++i) {
            preds.push_back(0.75);
            if (i < 9) {
                times.push_back(static_cast<double>(i + 1));
                events.push_back(true);
            } else {
                times.push_back(1000.0);
                events.push_back(false);
            }
        }
        const GndResult r = gnd_test(preds, times, events, 365.0, 2);
        CHECK(r.statistic == Approx(0.0).margin(1e-12));
        CHECK(r.df == 1);
        CHECK(r.p_value == Approx(1.0).margin(1e-12));
    }
    SECTION("statistic recomposes from the returned bins") {
        Rng rng(71);
        std::vector<double> preds, times;
        std::vector<bool> events;
        for (int i = 0; i < 90; ++i) {
            preds.push_back(rng.uniform01());
            times.push_back(rng.exponential(0.01));
            events.push_back(rng.bernoulli(0.8));
        }
        const double horizon = 120.0;
        const GndResult r = gnd_test(preds, times, events, horizon, 4);
        double stat = 0.0;
        for (const auto& bin : r.bins.bins) {
            std::vector<double> bt;
            std::vector<bool> be;
            std::vector<double> bp;
            for (int m : bin.members) {
                bt.push_back(times[static_cast<std::size_t>(m)]);
                be.push_back(events[static_cast<std::size_t>(m)]);
                bp.push_back(preds[static_cast<std::size_t>(m)]);
            }
            const auto km = kaplan_meier(bt, be);
            const double obs = 1.0 - km.survival_at(horizon);
            const double var = km.variance_at(horizon);
            const double mean = std::accumulate(bp.begin(), bp.end(), 0.0) /
                                static_cast<double>(bp.size());
            CHECK(bin.observed_risk == Approx(obs).margin(1e-12));
            CHECK(bin.mean_predicted == Approx(mean).margin(1e-12));
            REQUIRE(var > 0.0);
            stat += (obs - mean) * (obs - mean) / var;
        }
        CHECK(r.statistic == Approx(stat).margin(1e-10));
        CHECK(r.df == static_cast<int>(r.bins.bins.size()) - 1);
        CHECK(r.p_value ==
              Approx(chi_square_upper_tail(stat, r.df)).margin(1e-12));
        CHECK((r.p_value >= 0.0 && r.p_value <= 1.0));
    }
    SECTION("row order does not change the result") {
        Rng rng(72);
        std::vector<double> preds, times;
        std::vector<bool> events;
        for (int i = 0; i < 64; ++i) {
            preds.push_back(rng.uniform01());
            times.push_back(rng.exponential(0.01));
            events.push_back(rng.bernoulli(0.75));
        }
        const GndResult a = gnd_test(preds, times, events, 100.0);
        std::vector<int> perm(64);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        std::vector<double> p2, t2;
        std::vector<bool> e2;
        for (int k : perm) {
            p2.push_back(preds[static_cast<std::size_t>(k)]);
            t2.push_back(times[static_cast<std::size_t>(k)]);
            e2.push_back(events[static_cast<std::size_t>(k)]);
        }
        const GndResult b = gnd_test(p2, t2, e2, 100.0);
        CHECK(a.statistic == Approx(b.statistic).margin(1e-10));
        CHECK(a.df == b.df);
    }
    SECTION("bins short on events are merged before testing") {
        Rng rng(73);
        std::vector<double> preds, times;
        std::vector<bool> events;
        for (int i = 0; i < 100; ++i) {
            preds.push_back(rng.uniform01());
            // sparse events: most bins start below the merge floor
            const bool ev = rng.bernoulli(0.18);
            times.push_back(ev ? rng.uniform(1.0, 90.0) : 200.0);
            events.push_back(ev);
        }
        const GndResult r = gnd_test(preds, times, events, 100.0, 8);
        for (const auto& bin : r.bins.bins) CHECK(bin.events_by_horizon >= 5);
        CHECK(r.bins.bins.size() >= 2);
        long total = 0;
        for (const auto& bin : r.bins.bins) total += bin.count;
        CHECK(total == 100);
    }
    SECTION("small or degenerate inputs are rejected") {
        std::vector<double> p7(7, 0.5), t7(7, 10.0);
        std::vector<bool> e7(7, true);
        CHECK_THROWS_AS(gnd_test(p7, t7, e7, 20.0), DataError);

        // constant predictions cannot form two bins
        std::vector<double> p(20, 0.4), t;
        std::vector<bool> e;
        for (int i = 0; i < 20; ++i) {
            t.push_back(static_cast<double>(i + 1));
            e.push_back(true);
        }
        CHECK_THROWS_AS(gnd_test(p, t, e, 25.0, 4), DataError);

        // too few events to ever satisfy the merge floor
        Rng rng(74);
        std::vector<double> sp, st;
        std::vector<bool> se;
        for (int i = 0; i < 30; ++i) {
            sp.push_back(rng.uniform01());
            st.push_back(100.0);
            se.push_back(false);
        }
        st[3] = 10.0;
        se[3] = true;
        CHECK_THROWS_AS(gnd_test(sp, st, se, 50.0, 3), DataError);
    }
}

TEST_CASE("net benefit", "[netbenefit]") {
    SECTION("ten-subject worked example, binary mode") {
        // 5 treated (3 events), 5 untreated (1 event), threshold 0.1
        const std::vector<double> preds = {0.8, 0.7, 0.6, 0.5, 0.4, 0.05, 0.04, 0.03, 0.02, 0.01};
        const std::vector<double> times = {10, 500, 20, 500, 30, 500, 40, 500, 500, 500};
        const std::vector<bool> events = {true, false, true, false, true, false, true, false,
                                          false, false};
        const auto r = net_benefit(preds, times, events, 365.0, 0.1, NetBenefitMode::binary);
        CHECK(r.value == Approx(0.3 - 0.2 * (0.1 / 0.9)).epsilon(1e-12));
        CHECK(r.value == Approx(0.27777777777777779).margin(1e-10));
        CHECK(r.n_treated == 5);
    }
    SECTION("treating nobody is worth exactly zero") {
        const std::vector<double> preds = {0.01, 0.02, 0.03};
        const std::vector<double> times = {100, 200, 300};
        const std::vector<bool> events = {true, false, true};
        const auto r = net_benefit(preds, times, events, 365.0, 0.5);
        CHECK(r.value == 0.0);
        CHECK(r.n_treated == 0);
        CHECK(r.no_treated);
    }
    SECTION("treat-all at the prevalence threshold nets zero") {
        // uncensored binary cohort, prevalence 0.25
        std::vector<double> preds(8, 0.9), times;
        std::vector<bool> events;
        for (int i = 0; i < 8; ++i) {
            events.push_back(i < 2);
            times.push_back(i < 2 ? 50.0 : 500.0);
        }
        const auto r = net_benefit(preds, times, events, 365.0, 0.25, NetBenefitMode::binary);
        CHECK(r.value == Approx(0.0).margin(1e-12));
        CHECK(r.n_treated == 8);
    }
    SECTION("km mode equals binary mode without censoring") {
        Rng rng(90);
        std::vector<double> preds, times;
        std::vector<bool> events;
        for (int i = 0; i < 40; ++i) {
            preds.push_back(rng.uniform01());
            const bool ev = rng.bernoulli(0.4);
            events.push_back(ev);
            times.push_back(ev ? rng.uniform(1.0, 300.0) : 400.0);
        }
        const auto km = net_benefit(preds, times, events, 365.0, 0.3, NetBenefitMode::km);
        const auto bin = net_benefit(preds, times, events, 365.0, 0.3, NetBenefitMode::binary);
        CHECK(km.value == Approx(bin.value).margin(1e-12));
    }
    SECTION("binary mode refuses follow-up shorter than the horizon") {
        const std::vector<double> preds = {0.8, 0.2};
        const std::vector<double> times = {100, 500};
        const std::vector<bool> events = {false, false};
        CHECK_THROWS_AS(net_benefit(preds, times, events, 365.0, 0.1, NetBenefitMode::binary),
                        DataError);
    }
    SECTION("threshold domain is validated") {
        const std::vector<double> preds = {0.5};
        CHECK_THROWS_AS(net_benefit(preds, {10.0}, {true}, 5.0, 0.0), DataError);
        CHECK_THROWS_AS(net_benefit(preds, {10.0}, {true}, 5.0, 1.0), DataError);
    }
}

TEST_CASE("decision curves", "[netbenefit]") {
    Rng rng(91);
    std::vector<double> times;
    std::vector<bool> events;
    for (int i = 0; i < 60; ++i) {
        const bool ev = rng.bernoulli(0.35);
        events.push_back(ev);
        times.push_back(ev ? rng.uniform(1.0, 300.0) : rng.uniform(100.0, 900.0));
    }
    const std::vector<double> grid = {0.05, 0.15, 0.3, 0.5};

    SECTION("an always-treat model traces the treat-all curve") {
        const std::vector<double> ones(60, 0.999);
        const DecisionCurve c = decision_curve(ones, times, events, 365.0, grid);
        REQUIRE(c.thresholds.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(c.nb_model[i] == Approx(c.nb_treat_all[i]).margin(1e-12));
            CHECK(c.nb_treat_none[i] == 0.0);
        }
        const double pi = 1.0 - kaplan_meier(times, events).survival_at(365.0);
        CHECK(c.nb_treat_all[0] == Approx(pi - (1.0 - pi) * 0.05 / 0.95).margin(1e-12));
    }
    SECTION("a never-treat model sits on zero") {
        const std::vector<double> zeros(60, 0.001);
        const DecisionCurve c = decision_curve(zeros, times, events, 365.0, grid);
        for (double v : c.nb_model) CHECK(v == 0.0);
    }
    SECTION("curve entries match scalar evaluations") {
        std::vector<double> preds;
        for (int i = 0; i < 60; ++i) preds.push_back(rng.uniform01());
        const DecisionCurve c = decision_curve(preds, times, events, 365.0, grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
            CHECK(c.nb_model[i] ==
                  Approx(net_benefit(preds, times, events, 365.0, grid[i]).value).margin(1e-15));
    }
    SECTION("threshold grid validation") {
        const std::vector<double> preds(60, 0.2);
        CHECK_THROWS_AS(decision_curve(preds, times, events, 365.0, {}), DataError);
        CHECK_THROWS_AS(decision_curve(preds, times, events, 365.0, {0.2, 0.1}), DataError);
        CHECK_THROWS_AS(decision_curve(preds, times, events, 365.0, {0.0, 0.5}), DataError);
    }
    SECTION("default threshold set") {
        const auto t = default_thresholds();
        REQUIRE(t.size() == 3);
        CHECK(t[0] == 0.025);
        CHECK(t[1] == 0.0375);
        CHECK(t[2] == 0.1);
    }
}

TEST_CASE("net-benefit differences convert to per-1000 counts", "[netbenefit]") {
    const NbCounts a = nb_difference_to_counts(0.004, 0.0, 0.0375);
    CHECK(a.extra_tp_per_1000 == Approx(4.0).margin(0.01));
    CHECK(a.avoided_fp_per_1000 == Approx(102.666666666667).margin(0.01));

    const NbCounts b = nb_difference_to_counts(0.004, 0.0, 0.1);
    CHECK(b.extra_tp_per_1000 == Approx(4.0).margin(0.01));
    CHECK(b.avoided_fp_per_1000 == Approx(36.0).margin(0.01));

    const NbCounts zero = nb_difference_to_counts(0.25, 0.25, 0.1);
    CHECK(zero.extra_tp_per_1000 == 0.0);
    CHECK(zero.avoided_fp_per_1000 == 0.0);

    // linear in the difference
    const NbCounts twice = nb_difference_to_counts(0.008, 0.0, 0.1);
    CHECK(twice.extra_tp_per_1000 == Approx(2.0 * b.extra_tp_per_1000));
    CHECK(twice.avoided_fp_per_1000 == Approx(2.0 * b.avoided_fp_per_1000));
}
