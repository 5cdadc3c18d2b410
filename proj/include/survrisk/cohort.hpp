#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "survrisk/csv.hpp"
#include "survrisk/error.hpp"
#include "survrisk/rng.hpp"

namespace survrisk {

enum class Sex { female, male };

// One row per person. Times are in days from the index date.
struct Subject {
    std::string id;
    int age = 0;
    Sex sex = Sex::female;
    double hdl = 0.0;
    double total_cholesterol = 0.0;
    bool hypertension = false;
    bool diabetes = false;
    bool smoker = false;
    bool antihypertensive = false;
    bool ckd = false;
    bool ra = false;
    std::string zip5;
    double follow_up_days = 0.0;
    bool event = false;

    int zip3() const { return std::stoi(zip5.substr(0, 3)); }
};

struct Cohort {
    std::vector<Subject> subjects;
    std::string provenance;

    std::size_t size() const { return subjects.size(); }

    std::vector<double> follow_up_times() const {
        std::vector<double> t;
        t.reserve(subjects.size());
        for (const auto& s : subjects) t.push_back(s.follow_up_days);
        return t;
    }

    std::vector<bool> event_flags() const {
        std::vector<bool> e;
        e.reserve(subjects.size());
        for (const auto& s : subjects) e.push_back(s.event);
        return e;
    }
};

inline const std::vector<std::string>& covariate_names() {
    static const std::vector<std::string> names = {
        "age", "sex", "hdl", "total_cholesterol", "hypertension",
        "diabetes", "smoker", "antihypertensive", "ckd", "ra"};
    return names;
}

// numeric encoding shared by the design matrix, the simulator and the trees:
// booleans -> {0,1}, sex -> {0,1} with female = 0, continuous kept on raw scale
inline double covariate_value(const Subject& s, const std::string& name) {
    if (name == "age") return static_cast<double>(s.age);
    if (name == "sex") return s.sex == Sex::male ? 1.0 : 0.0;
    if (name == "hdl") return s.hdl;
    if (name == "total_cholesterol") return s.total_cholesterol;
    if (name == "hypertension") return s.hypertension ? 1.0 : 0.0;
    if (name == "diabetes") return s.diabetes ? 1.0 : 0.0;
    if (name == "smoker") return s.smoker ? 1.0 : 0.0;
    if (name == "antihypertensive") return s.antihypertensive ? 1.0 : 0.0;
    if (name == "ckd") return s.ckd ? 1.0 : 0.0;
    if (name == "ra") return s.ra ? 1.0 : 0.0;
    throw DataError("unknown covariate: " + name);
}

inline const std::vector<std::string>& cohort_csv_columns() {
    static const std::vector<std::string> cols = {
        "id", "age", "sex", "hdl", "total_cholesterol", "hypertension", "diabetes",
        "smoker", "antihypertensive", "ckd", "ra", "zip5", "follow_up_days", "event"};
    return cols;
}

// canonical field name -> CSV column name; defaults to the identity schema
using CsvSchema = std::map<std::string, std::string>;

inline CsvSchema default_schema() {
    CsvSchema s;
    for (const auto& c : cohort_csv_columns()) s[c] = c;
    return s;
}

namespace detail {

inline double parse_real(const std::string& cell, long line, const std::string& col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line) + ": cannot parse '" + cell +
                        "' as a number in column " + col);
    }
}

inline int parse_int(const std::string& cell, long line, const std::string& col) {
    const double v = parse_real(cell, line, col);
    if (v != std::floor(v))
        throw DataError("line " + std::to_string(line) + ": column " + col + " must be an integer");
    return static_cast<int>(v);
}

inline bool parse_flag(const std::string& cell, long line, const std::string& col) {
    if (cell == "0") return false;
    if (cell == "1") return true;
    throw DataError("line " + std::to_string(line) + ": column " + col + " must be 0 or 1, got '" +
                    cell + "'");
}

inline Sex parse_sex(const std::string& cell, long line) {
    if (cell == "F" || cell == "f") return Sex::female;
    if (cell == "M" || cell == "m") return Sex::male;
    throw DataError("line " + std::to_string(line) + ": sex must be F or M, got '" + cell + "'");
}

inline bool valid_zip5(const std::string& z) {
    if (z.size() != 5) return false;
    for (char c : z)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace detail

// Reads a cohort CSV. The claims-side exclusions (statin use, prior CVD) are
// assumed to have been applied upstream; this loader only validates the row
// schema and the per-subject invariants.
inline Cohort load_cohort(const std::string& path, const CsvSchema& schema = default_schema()) {
    const CsvTable table = read_csv(path);

    std::map<std::string, int> col;
    for (const auto& field : cohort_csv_columns()) {
        auto it = schema.find(field);
        const std::string col_name = it == schema.end() ? field : it->second;
        const int idx = table.column(col_name);
        if (idx < 0) throw DataError("missing column: " + col_name + " (field " + field + ")");
        col[field] = idx;
    }

    Cohort cohort;
    cohort.provenance = path;
    cohort.subjects.reserve(table.rows.size());
    std::unordered_set<std::string> seen_ids;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const long line = table.line_numbers[r];
        Subject s;
        s.id = row[static_cast<std::size_t>(col["id"])];
        if (!seen_ids.insert(s.id).second)
            throw DataError("line " + std::to_string(line) + ": duplicate id '" + s.id + "'");
        s.age = detail::parse_int(row[static_cast<std::size_t>(col["age"])], line, "age");
        s.sex = detail::parse_sex(row[static_cast<std::size_t>(col["sex"])], line);
        s.hdl = detail::parse_real(row[static_cast<std::size_t>(col["hdl"])], line, "hdl");
        s.total_cholesterol = detail::parse_real(
            row[static_cast<std::size_t>(col["total_cholesterol"])], line, "total_cholesterol");
        s.hypertension =
            detail::parse_flag(row[static_cast<std::size_t>(col["hypertension"])], line, "hypertension");
        s.diabetes = detail::parse_flag(row[static_cast<std::size_t>(col["diabetes"])], line, "diabetes");
        s.smoker = detail::parse_flag(row[static_cast<std::size_t>(col["smoker"])], line, "smoker");
        s.antihypertensive = detail::parse_flag(
            row[static_cast<std::size_t>(col["antihypertensive"])], line, "antihypertensive");
        s.ckd = detail::parse_flag(row[static_cast<std::size_t>(col["ckd"])], line, "ckd");
        s.ra = detail::parse_flag(row[static_cast<std::size_t>(col["ra"])], line, "ra");
        s.zip5 = row[static_cast<std::size_t>(col["zip5"])];
        if (!detail::valid_zip5(s.zip5))
            throw DataError("line " + std::to_string(line) + ": zip5 must be 5 digits, got '" +
                            s.zip5 + "'");
        s.follow_up_days = detail::parse_real(
            row[static_cast<std::size_t>(col["follow_up_days"])], line, "follow_up_days");
        if (!(s.follow_up_days > 0.0))
            throw DataError("line " + std::to_string(line) + ": follow_up_days must be positive");
        s.event = detail::parse_flag(row[static_cast<std::size_t>(col["event"])], line, "event");
        cohort.subjects.push_back(std::move(s));
    }
    if (cohort.subjects.empty()) throw DataError("no data rows in " + path);
    return cohort;
}

inline void save_cohort(const Cohort& cohort, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(cohort.size());
    for (const auto& s : cohort.subjects) {
        rows.push_back({s.id, std::to_string(s.age), s.sex == Sex::male ? "M" : "F",
                        fmt_double(s.hdl), fmt_double(s.total_cholesterol),
                        s.hypertension ? "1" : "0", s.diabetes ? "1" : "0", s.smoker ? "1" : "0",
                        s.antihypertensive ? "1" : "0", s.ckd ? "1" : "0", s.ra ? "1" : "0",
                        s.zip5, fmt_double(s.follow_up_days), s.event ? "1" : "0"});
    }
    write_csv(path, cohort_csv_columns(), rows);
}

struct EligibilityBounds {
    int age_min = 40, age_max = 75;
    double hdl_min = 20.0, hdl_max = 100.0;
    double tc_min = 130.0, tc_max = 320.0;
};

// Guideline-style filter; all bounds inclusive. Order preserved, idempotent.
inline Cohort apply_eligibility(const Cohort& cohort, const EligibilityBounds& b = {}) {
    Cohort out;
    out.provenance = cohort.provenance;
    for (const auto& s : cohort.subjects) {
        if (s.age < b.age_min || s.age > b.age_max) continue;
        if (s.hdl < b.hdl_min || s.hdl > b.hdl_max) continue;
        if (s.total_cholesterol < b.tc_min || s.total_cholesterol > b.tc_max) continue;
        out.subjects.push_back(s);
    }
    if (out.subjects.empty()) throw DataError("eligibility filter removed every subject");
    return out;
}

// Seeded permutation split; both parts keep the original cohort order.
// Train size is round(fraction * N), clamped so neither part is empty.
inline std::pair<Cohort, Cohort> split_train_test(const Cohort& cohort, double train_fraction,
                                                  std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train_fraction must be in (0, 1)");
    const std::size_t n = cohort.size();
    if (n < 2) throw DataError("need at least 2 subjects to split");

    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);
    std::size_t n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    n_train = std::min(std::max<std::size_t>(n_train, 1), n - 1);

    std::vector<char> in_train(n, 0);
    for (std::size_t i = 0; i < n_train; ++i) in_train[static_cast<std::size_t>(idx[i])] = 1;

    Cohort train, test;
    train.provenance = cohort.provenance + " [train]";
    test.provenance = cohort.provenance + " [test]";
    for (std::size_t i = 0; i < n; ++i)
        (in_train[i] ? train : test).subjects.push_back(cohort.subjects[i]);
    return {std::move(train), std::move(test)};
}

}  // namespace survrisk
