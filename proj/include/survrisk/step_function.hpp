#pragma once

#include <algorithm>
#include <vector>

namespace survrisk {

// Right-continuous step function that is `before` left of the first knot.
// Used for cumulative hazards and survival curves.
struct StepFunction {
    std::vector<double> times;   // strictly increasing knots
    std::vector<double> values;  // value on [times[k], times[k+1])
    double before = 0.0;

    double operator()(double t) const {
        auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return before;
        return values[static_cast<std::size_t>(it - times.begin()) - 1];
    }

    // value just before t: jumps at t itself are excluded
    double left_limit(double t) const {
        auto it = std::lower_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return before;
        return values[static_cast<std::size_t>(it - times.begin()) - 1];
    }

    bool empty() const { return times.empty(); }
};

}  // namespace survrisk
