#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <vector>

#include "seek/environment.hpp"
#include "seek/seeker.hpp"

namespace seek {

struct RegretRecord {
    int step = 0;
    std::vector<int> oracle_cells;  // rank order
    std::vector<int> chosen_cells;  // rank order
    double instant = 0.0;
    double cumulative = 0.0;
};

/// Sum of the state over the union of the given cells (duplicates
/// count once).
inline double union_sum(const Eigen::VectorXd& state,
                        std::vector<int> cells) {
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    double s = 0.0;
    for (int c : cells) s += state[c];
    return s;
}

/// Clairvoyant per-step comparator: the top cells of the supplied
/// state vector, with the same tie-break as the seeker.
inline std::vector<int> oracle_positions(const Eigen::VectorXd& state,
                                         int count) {
    return top_indices(state, count);
}

/// Per-step regret against the clairvoyant comparator.  Externally
/// disturbed runs score against the nominal state; internally
/// disturbed runs score against the disturbed one.
class RegretTracker {
public:
    explicit RegretTracker(DisturbanceType type) : type_(type) {}

    RegretRecord record(const EnvironmentState& env,
                        const std::vector<int>& chosen) {
        const Eigen::VectorXd& ref =
            type_ == DisturbanceType::external ? env.phi : env.phi_tilde;
        RegretRecord r;
        r.step = env.step;
        r.chosen_cells = chosen;
        r.oracle_cells =
            oracle_positions(ref, static_cast<int>(chosen.size()));
        const double gap =
            union_sum(ref, r.oracle_cells) - union_sum(ref, chosen);
        // identical union sums can differ by rounding; regret is a gap
        r.instant = gap < 0.0 && gap > -1e-12 ? 0.0 : gap;
        cumulative_ += r.instant;
        r.cumulative = cumulative_;
        return r;
    }

    double cumulative() const { return cumulative_; }

private:
    DisturbanceType type_;
    double cumulative_ = 0.0;
};

}  // namespace seek
