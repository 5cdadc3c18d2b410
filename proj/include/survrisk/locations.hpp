#pragma once

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <map>
#include <vector>

#include "survrisk/cohort.hpp"
#include "survrisk/error.hpp"

namespace survrisk {

// Assignment of zip3 prefixes to merged location groups. A group id is the
// lowest member prefix of the group.
struct LocationMap {
    std::map<int, int> assignments;  // zip3 -> group id
    std::map<int, int> group_sizes;  // group id -> subject count
    int min_size = 3000;

    bool covers(int zip3) const { return assignments.count(zip3) > 0; }

    int group_of(int zip3) const {
        auto it = assignments.find(zip3);
        if (it == assignments.end())
            throw DataError("zip3 " + std::to_string(zip3) + " not covered by the location map");
        return it->second;
    }

    std::vector<int> group_ids() const {
        std::vector<int> ids;
        ids.reserve(group_sizes.size());
        for (const auto& [id, sz] : group_sizes) ids.push_back(id);
        return ids;  // sorted: std::map iteration order
    }
};

// Groups subjects by zip3 and merges small groups until every group has at
// least min_size members (or only one group remains). In each round the
// smallest deficient group is merged with its nearest group, where distance
// is the minimum pairwise |zip3_a - zip3_b| over member prefixes and ties go
// to the lower prefix. Geographic adjacency is not modeled; swap in a
// distance table here if one is available.
inline LocationMap merge_locations(const Cohort& cohort, int min_size = 3000) {
    if (cohort.subjects.empty()) throw DataError("merge_locations: empty cohort");
    if (min_size < 1) throw ConfigError("min_size must be positive");

    std::map<int, int> zip3_counts;
    for (const auto& s : cohort.subjects) ++zip3_counts[s.zip3()];

    struct Group {
        std::vector<int> members;  // sorted zip3 prefixes
        int size = 0;
    };
    std::vector<Group> groups;
    for (const auto& [z, c] : zip3_counts) groups.push_back({{z}, c});

    auto distance = [](const Group& a, const Group& b) {
        int best = std::numeric_limits<int>::max();
        for (int za : a.members)
            for (int zb : b.members) best = std::min(best, std::abs(za - zb));
        return best;
    };

    while (groups.size() > 1) {
        // smallest deficient group; ties by lower leading prefix
        int target = -1;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (groups[g].size >= min_size) continue;
            if (target < 0 || groups[g].size < groups[target].size ||
                (groups[g].size == groups[static_cast<std::size_t>(target)].size &&
                 groups[g].members.front() < groups[static_cast<std::size_t>(target)].members.front()))
                target = static_cast<int>(g);
        }
        if (target < 0) break;

        int partner = -1, best_dist = std::numeric_limits<int>::max();
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (static_cast<int>(g) == target) continue;
            const int d = distance(groups[static_cast<std::size_t>(target)], groups[g]);
            if (d < best_dist ||
                (d == best_dist && groups[g].members.front() <
                                       groups[static_cast<std::size_t>(partner)].members.front())) {
                best_dist = d;
                partner = static_cast<int>(g);
            }
        }
        auto& dst = groups[static_cast<std::size_t>(std::min(target, partner))];
        auto& src = groups[static_cast<std::size_t>(std::max(target, partner))];
        dst.members.insert(dst.members.end(), src.members.begin(), src.members.end());
        std::sort(dst.members.begin(), dst.members.end());
        dst.size += src.size;
        groups.erase(groups.begin() + std::max(target, partner));
    }

    LocationMap map;
    map.min_size = min_size;
    for (const auto& g : groups) {
        const int id = g.members.front();
        map.group_sizes[id] = g.size;
        for (int z : g.members) map.assignments[z] = id;
    }
    return map;
}

// group id per subject, in cohort order
inline std::vector<int> subject_groups(const Cohort& cohort, const LocationMap& map) {
    std::vector<int> out;
    out.reserve(cohort.size());
    for (const auto& s : cohort.subjects) out.push_back(map.group_of(s.zip3()));
    return out;
}

}  // namespace survrisk
