#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "survrisk/cohort.hpp"
#include "survrisk/error.hpp"
#include "survrisk/rng.hpp"

namespace survrisk {

// Marginal generators for baseline covariates. Defaults land every subject
// inside the eligibility window.
struct CovariateDistributions {
    int age_min = 40, age_max = 75;
    double hdl_min = 20.0, hdl_max = 100.0;
    double tc_min = 130.0, tc_max = 320.0;
    double p_male = 0.5;
    double p_hypertension = 0.30;
    double p_diabetes = 0.15;
    double p_smoker = 0.25;
    double p_antihypertensive = 0.20;
    double p_ckd = 0.05;
    double p_ra = 0.02;
};

// Proportional-hazards generator: per-location gamma frailty (mean 1,
// variance theta), Weibull baseline hazard, exponential plus administrative
// censoring.
struct SimulationConfig {
    long n_subjects = 0;
    long n_locations = 1;
    std::map<std::string, double> beta;  // covariate name -> log-hazard effect
    double frailty_variance = 0.0;
    double weibull_shape = 1.0;
    double weibull_scale_days = 20000.0;
    double censoring_rate_per_day = 0.0;
    double admin_censor_days = 3652.0;
    CovariateDistributions covariates;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_subjects < 1) throw ConfigError("n_subjects must be positive");
        if (n_locations < 1 || n_locations > n_subjects)
            throw ConfigError("need n_subjects >= n_locations >= 1");
        if (n_locations > 900) throw ConfigError("n_locations is limited to 900 distinct zip3 prefixes");
        if (frailty_variance < 0.0) throw ConfigError("frailty_variance must be >= 0");
        if (weibull_shape <= 0.0 || weibull_scale_days <= 0.0)
            throw ConfigError("weibull shape and scale must be positive");
        if (censoring_rate_per_day < 0.0) throw ConfigError("censoring_rate_per_day must be >= 0");
        if (admin_censor_days <= 0.0) throw ConfigError("admin_censor_days must be positive");
        for (const auto& [name, b] : beta) covariate_value(Subject{}, name);  // name check
        const auto& c = covariates;
        if (c.age_min > c.age_max || c.hdl_min > c.hdl_max || c.tc_min > c.tc_max)
            throw ConfigError("covariate ranges must satisfy min <= max");
        for (double p : {c.p_male, c.p_hypertension, c.p_diabetes, c.p_smoker,
                         c.p_antihypertensive, c.p_ckd, c.p_ra})
            if (p < 0.0 || p > 1.0) throw ConfigError("covariate probabilities must be in [0, 1]");
    }
};

namespace detail {

inline std::map<std::string, std::string> read_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        if (kv.count(key)) throw ConfigError(path + ": duplicate key " + key);
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

}  // namespace detail

// Flat key=value format. Scalar keys are the SimulationConfig field names;
// effects use beta.<covariate>; marginals use cov.<parameter>. Unknown keys
// are rejected.
inline SimulationConfig load_simulation_config(const std::string& path) {
    SimulationConfig cfg;
    auto kv = detail::read_key_value_file(path);
    auto to_real = [&](const std::string& key, const std::string& val) {
        try {
            std::size_t pos = 0;
            double v = std::stod(val, &pos);
            if (pos != val.size()) throw std::invalid_argument(val);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(path + ": cannot parse value for " + key + ": '" + val + "'");
        }
    };
    for (const auto& [key, val] : kv) {
        if (key == "n_subjects") cfg.n_subjects = static_cast<long>(to_real(key, val));
        else if (key == "n_locations") cfg.n_locations = static_cast<long>(to_real(key, val));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(val));
        else if (key == "frailty_variance") cfg.frailty_variance = to_real(key, val);
        else if (key == "weibull_shape") cfg.weibull_shape = to_real(key, val);
        else if (key == "weibull_scale_days") cfg.weibull_scale_days = to_real(key, val);
        else if (key == "censoring_rate_per_day") cfg.censoring_rate_per_day = to_real(key, val);
        else if (key == "admin_censor_days") cfg.admin_censor_days = to_real(key, val);
        else if (key.rfind("beta.", 0) == 0) {
            const std::string name = key.substr(5);
            covariate_value(Subject{}, name);
            cfg.beta[name] = to_real(key, val);
        } else if (key.rfind("cov.", 0) == 0) {
            const std::string p = key.substr(4);
            auto& c = cfg.covariates;
            if (p == "age_min") c.age_min = static_cast<int>(to_real(key, val));
            else if (p == "age_max") c.age_max = static_cast<int>(to_real(key, val));
            else if (p == "hdl_min") c.hdl_min = to_real(key, val);
            else if (p == "hdl_max") c.hdl_max = to_real(key, val);
            else if (p == "tc_min") c.tc_min = to_real(key, val);
            else if (p == "tc_max") c.tc_max = to_real(key, val);
            else if (p == "p_male") c.p_male = to_real(key, val);
            else if (p == "p_hypertension") c.p_hypertension = to_real(key, val);
            else if (p == "p_diabetes") c.p_diabetes = to_real(key, val);
            else if (p == "p_smoker") c.p_smoker = to_real(key, val);
            else if (p == "p_antihypertensive") c.p_antihypertensive = to_real(key, val);
            else if (p == "p_ckd") c.p_ckd = to_real(key, val);
            else if (p == "p_ra") c.p_ra = to_real(key, val);
            else throw ConfigError(path + ": unknown key " + key);
        } else {
            throw ConfigError(path + ": unknown key " + key);
        }
    }
    return cfg;
}

// Draws a cohort from the generative model. Locations are filled round-robin;
// zip3 for location i is 100 + i and zip5 appends "00". Event times come from
// inverting H(t) = Z * exp(beta'x) * (t/scale)^shape at -log(U).
inline Cohort simulate_cohort(const SimulationConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);

    std::vector<double> frailty(static_cast<std::size_t>(cfg.n_locations), 1.0);
    if (cfg.frailty_variance > 0.0) {
        const double theta = cfg.frailty_variance;
        for (auto& z : frailty) z = rng.gamma(1.0 / theta, theta);
    }

    const auto& cv = cfg.covariates;
    Cohort cohort;
    cohort.provenance = "simulated(seed=" + std::to_string(cfg.seed) + ")";
    cohort.subjects.reserve(static_cast<std::size_t>(cfg.n_subjects));
    for (long i = 0; i < cfg.n_subjects; ++i) {
        Subject s;
        char idbuf[24];
        std::snprintf(idbuf, sizeof(idbuf), "S%07ld", i + 1);
        s.id = idbuf;
        const long loc = i % cfg.n_locations;
        const int zip3 = 100 + static_cast<int>(loc);
        char zipbuf[16];
        std::snprintf(zipbuf, sizeof(zipbuf), "%03d00", zip3);
        s.zip5 = zipbuf;

        s.age = static_cast<int>(rng.uniform_int(cv.age_min, cv.age_max));
        s.sex = rng.bernoulli(cv.p_male) ? Sex::male : Sex::female;
        s.hdl = rng.uniform(cv.hdl_min, cv.hdl_max);
        s.total_cholesterol = rng.uniform(cv.tc_min, cv.tc_max);
        s.hypertension = rng.bernoulli(cv.p_hypertension);
        s.diabetes = rng.bernoulli(cv.p_diabetes);
        s.smoker = rng.bernoulli(cv.p_smoker);
        s.antihypertensive = rng.bernoulli(cv.p_antihypertensive);
        s.ckd = rng.bernoulli(cv.p_ckd);
        s.ra = rng.bernoulli(cv.p_ra);

        double lin = 0.0;
        for (const auto& [name, b] : cfg.beta) lin += b * covariate_value(s, name);
        const double rate_scale = frailty[static_cast<std::size_t>(loc)] * std::exp(lin);

        const double u = rng.uniform01();
        const double event_time =
            cfg.weibull_scale_days * std::pow(-std::log(u) / rate_scale, 1.0 / cfg.weibull_shape);
        double censor_time = cfg.admin_censor_days;
        if (cfg.censoring_rate_per_day > 0.0)
            censor_time = std::min(censor_time, rng.exponential(cfg.censoring_rate_per_day));

        s.event = event_time <= censor_time;
        s.follow_up_days = s.event ? event_time : censor_time;
        cohort.subjects.push_back(std::move(s));
    }
    return cohort;
}

}  // namespace survrisk
