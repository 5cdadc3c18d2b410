#pragma once

// shared test fixtures: quick subject/cohort builders, temp-file plumbing,
// and the independent brute-force oracles the suites compare against.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "survrisk/cohort.hpp"

namespace testutil {

inline survrisk::Subject make_subject(const std::string& id, double follow_up = 1000.0,
                                      bool event = false, const std::string& zip5 = "99901") {
    survrisk::Subject s;
    s.id = id;
    s.age = 50;
    s.sex = survrisk::Sex::female;
    s.hdl = 50.0;
    s.total_cholesterol = 200.0;
    s.zip5 = zip5;
    s.follow_up_days = follow_up;
    s.event = event;
    return s;
}

inline survrisk::Cohort make_cohort(const std::vector<double>& times,
                                    const std::vector<bool>& events) {
    survrisk::Cohort c;
    c.provenance = "test";
    for (std::size_t i = 0; i < times.size(); ++i)
        c.subjects.push_back(make_subject("S" + std::to_string(i), times[i], events[i]));
    return c;
}

inline std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

inline std::string write_text(const std::string& name, const std::string& content) {
    const std::string path = tmp_path(name);
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// O(n^2) truncated concordance: usable pair = earlier subject has an observed
// event at or before the horizon and strictly earlier time; concordant when
// the earlier subject's prediction is strictly higher.
struct BruteForceC {
    double concordant = 0.0;
    long usable = 0;
};

inline BruteForceC brute_force_c(const std::vector<double>& predictions,
                                 const std::vector<double>& times,
                                 const std::vector<bool>& events, double horizon,
                                 bool ties_half = false) {
    BruteForceC r;
    const std::size_t n = times.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!events[i] || times[i] > horizon) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !(times[i] < times[j])) continue;
            ++r.usable;
            if (predictions[i] > predictions[j]) r.concordant += 1.0;
            else if (ties_half && predictions[i] == predictions[j]) r.concordant += 0.5;
        }
    }
    return r;
}

// Naive Breslow log partial likelihood via explicit risk-set double loops;
// deliberately a different algorithm from the library's single sweep.
inline double naive_breslow_loglik(const std::vector<std::vector<double>>& x,
                                   const std::vector<double>& times,
                                   const std::vector<bool>& events,
                                   const std::vector<double>& beta) {
    const std::size_t n = times.size();
    auto eta = [&](std::size_t i) {
        double v = 0.0;
        for (std::size_t k = 0; k < beta.size(); ++k) v += beta[k] * x[i][k];
        return v;
    };
    double ll = 0.0;
    std::vector<double> seen;
    for (std::size_t i = 0; i < n; ++i) {
        if (!events[i]) continue;
        bool dup = false;
        for (double t : seen) dup = dup || t == times[i];
        if (dup) continue;
        seen.push_back(times[i]);
        double denom = 0.0;
        int d = 0;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (times[j] >= times[i]) denom += std::exp(eta(j));
            if (events[j] && times[j] == times[i]) {
                ++d;
                s += eta(j);
            }
        }
        ll += s - d * std::log(denom);
    }
    return ll;
}

}  // namespace testutil
