#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "seek/filter.hpp"
#include "seek/grid.hpp"
#include "seek/numerics.hpp"

namespace seek {

enum class ConfidenceMode { external, internal };

/// Constants entering the confidence radius.  These are declared
/// scenario knowledge (bounds the seeker is allowed to assume), not
/// quantities estimated from data.
struct ConfidenceParams {
    double delta = 0.1;        // confidence level, in (0, 1)
    double c_beta = 1.0;       // calibration multiplier on the radius
    double prior_error = 1.0;  // bound on ||m_0 - phi_0||
    double sigma_lower = 1.0;  // S_0 >= sigma_lower I
    double sigma_upper = 1.0;  // S_0 <= sigma_upper I
    double v_lower = 1.0;      // noise variance bounds
    double v_upper = 1.0;
    double alpha_lower = 1.0;  // transition-product bounds
    double alpha_upper = 1.0;
    double phi_bar = 0.0;      // state norm bound (internal mode only)

    double prior_coeff() const { return prior_error / std::sqrt(sigma_lower); }
    double noise_coeff() const {
        return v_upper * v_upper * std::sqrt(std::max(2.0, 2.0 / v_lower));
    }
    double bound_coeff() const { return phi_bar / std::sqrt(alpha_lower); }
};

/// Confidence radius sequence beta_k(delta) for the diagonal UCB.
///
/// external mode (adaptive weights, budget B_k declared by the
/// scenario):
///   beta_k = cb * sqrt(N) * ( cap * B_k + C1
///            + C2 sqrt(N) sqrt(log((su/sl + au*su*k/vl^2) / delta^{2/N})) )
/// internal mode (forgetting factor gamma):
///   beta_k = cb * sqrt(N) * ( C1 + g^{(1-k)/2} * ( C3
///            + C2 sqrt(N) sqrt(log((1 + au/vl^2 * q_k) / delta^{2/N})) ) )
/// with q_k = sum_{t<k} g^{2(k-t-1)} evaluated in closed form.
class ConfidenceSchedule {
public:
    ConfidenceSchedule(ConfidenceMode mode, int dim, ConfidenceParams params,
                       double lambda_cap = 1.0, double gamma = 1.0)
        : mode_(mode),
          dim_(dim),
          p_(params),
          lambda_cap_(lambda_cap),
          gamma_(gamma) {
        if (!(p_.delta > 0.0 && p_.delta < 1.0))
            throw std::invalid_argument("delta must lie in (0, 1)");
        if (!(p_.c_beta > 0.0))
            throw std::invalid_argument("c_beta must be positive");
        if (!(gamma_ > 0.0 && gamma_ <= 1.0))
            throw std::invalid_argument("gamma must lie in (0, 1]");
        if (dim_ < 1) throw std::invalid_argument("dimension must be positive");
    }

    ConfidenceMode mode() const { return mode_; }

    /// Radius at step k; `budget_k` is the declared cumulative
    /// disturbance bound B_k (external mode only).
    double beta(int k, double budget_k = 0.0) const {
        const double n = static_cast<double>(dim_);
        const double rn = std::sqrt(n);
        if (mode_ == ConfidenceMode::external) {
            const double log_arg =
                std::log(p_.sigma_upper / p_.sigma_lower +
                         p_.alpha_upper * p_.sigma_upper * k /
                             (p_.v_lower * p_.v_lower)) -
                (2.0 / n) * std::log(p_.delta);
            if (!(log_arg > 0.0))
                throw std::logic_error("confidence log argument not positive");
            return p_.c_beta * rn *
                   (lambda_cap_ * budget_k + p_.prior_coeff() +
                    p_.noise_coeff() * rn * std::sqrt(log_arg));
        }
        const double scale = std::pow(gamma_, (1.0 - k) / 2.0);
        return p_.c_beta * rn *
               (p_.prior_coeff() +
                scale * (p_.bound_coeff() +
                         p_.noise_coeff() * rn * std::sqrt(log_term(k))));
    }

    /// Radius already folded by gamma^{(k-1)/2}, for use against the
    /// stable-form covariance: beta_k sqrt(diag S_k) equals
    /// beta_scaled_k sqrt(diag St_k) exactly, and this form stays
    /// bounded for large k.
    double beta_stable_scaled(int k) const {
        if (mode_ != ConfidenceMode::internal)
            throw std::logic_error("stable scaling applies to internal mode");
        const double n = static_cast<double>(dim_);
        const double rn = std::sqrt(n);
        const double decay = std::pow(gamma_, (k - 1.0) / 2.0);
        return p_.c_beta * rn *
               (decay * p_.prior_coeff() + p_.bound_coeff() +
                p_.noise_coeff() * rn * std::sqrt(log_term(k)));
    }

private:
    double log_term(int k) const {
        const double n = static_cast<double>(dim_);
        // sum_{t=0}^{k-1} gamma^{2(k-t-1)}
        const double q =
            gamma_ < 1.0
                ? (1.0 - std::pow(gamma_, 2.0 * k)) / (1.0 - gamma_ * gamma_)
                : static_cast<double>(k);
        const double arg =
            std::log(1.0 + p_.alpha_upper / (p_.v_lower * p_.v_lower) * q) -
            (2.0 / n) * std::log(p_.delta);
        if (!(arg > 0.0))
            throw std::logic_error("confidence log argument not positive");
        return arg;
    }

    ConfidenceMode mode_;
    int dim_;
    ConfidenceParams p_;
    double lambda_cap_;
    double gamma_;
};

/// Diagonal upper confidence bound: mean + beta * sqrt(diag cov),
/// elementwise.  For a stable-form filter pass the folded radius from
/// beta_stable_scaled so the product matches the standard-form bound.
inline Eigen::VectorXd ducb(const FilterState& state, double beta) {
    Eigen::VectorXd diag = state.cov.diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        if (diag[i] < -1e-12)
            throw covariance_singular_error(state.step);
        diag[i] = std::max(0.0, diag[i]);
    }
    return state.mean + beta * diag.cwiseSqrt();
}

/// Chosen cells plus the 0/1 action encoding with exactly one entry
/// per agent.
struct Decision {
    Eigen::VectorXd ucb;             // the scores the choice was made from
    std::vector<int> positions;      // rank order: score desc, index asc
    Eigen::VectorXd action;          // 0/1, sum = positions.size()
};

/// Indices of the `count` largest entries, ranked by value descending
/// with ties broken toward the smaller index.
inline std::vector<int> top_indices(const Eigen::VectorXd& values,
                                    int count) {
    const int n = static_cast<int>(values.size());
    if (count > n)
        throw std::invalid_argument("cannot select more cells than exist");
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + count, idx.end(),
                      [&](int a, int b) {
                          if (values[a] != values[b])
                              return values[a] > values[b];
                          return a < b;
                      });
    idx.resize(static_cast<std::size_t>(count));
    return idx;
}

/// Maximizes the sum of scores over the union of chosen cells.  Since
/// duplicates add nothing to a union, distinct top-count cells are
/// optimal whenever scores are positive, and are the deterministic
/// choice here in general.
inline Decision select_positions(const Eigen::VectorXd& scores, int count) {
    Decision d;
    d.positions = top_indices(scores, count);
    d.action = Eigen::VectorXd::Zero(scores.size());
    for (int p : d.positions) d.action[p] = 1.0;
    d.ucb = scores;
    return d;
}

/// Minimum-cost assignment (Jonker-Volgenant style shortest augmenting
/// paths, O(n^3)).  Returns column assigned to each row.
inline std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw std::invalid_argument("cost must be square");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // col -> row
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            double best = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) -
                                   u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < best) {
                    best = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(
                        match[static_cast<std::size_t>(j)])] += best;
                    v[static_cast<std::size_t>(j)] -= best;
                } else {
                    minv[static_cast<std::size_t>(j)] -= best;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] =
                match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (match[static_cast<std::size_t>(j)] > 0)
            row_to_col[static_cast<std::size_t>(
                match[static_cast<std::size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

/// Distributes the chosen cells to agents, minimizing total squared
/// grid distance from the previous positions.  Motion is unconstrained;
/// this only keeps trajectories sensible.
inline std::vector<int> assign_agents(const std::vector<int>& chosen,
                                      const std::vector<int>& previous,
                                      const GridSpec& grid) {
    if (chosen.size() != previous.size())
        throw std::invalid_argument("agent/cell count mismatch");
    const int n = static_cast<int>(chosen.size());
    Eigen::MatrixXd cost(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            cost(i, j) = grid.distance_sq(previous[static_cast<std::size_t>(i)],
                                          chosen[static_cast<std::size_t>(j)]);
    const std::vector<int> pick = min_cost_assignment(cost);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] =
            chosen[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
    return out;
}

}  // namespace seek
