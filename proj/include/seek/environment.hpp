#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <stdexcept>
#include <vector>

#include "seek/grid.hpp"
#include "seek/numerics.hpp"
#include "seek/rng.hpp"

namespace seek {

/// How a disturbance enters the state evolution.
///   external: added on top of the nominally-evolved state; the nominal
///             trajectory itself is never touched.
///   internal: injected into the recursion, so it accumulates and moves
///             the true sources.
enum class DisturbanceType { external, internal };

/// Transition schedule A_k (k >= 1) with declared uniform bounds
/// alpha_lower * I <= A[k:t]' A[k:t] <= alpha_upper * I on products of
/// consecutive transitions.  Each A_k must be invertible.
class DynamicsModel {
public:
    static DynamicsModel invariant(Eigen::SparseMatrix<double> a,
                                   double alpha_lower, double alpha_upper) {
        DynamicsModel m;
        m.dim_ = static_cast<int>(a.rows());
        m.sparse_ = std::make_shared<Eigen::SparseMatrix<double>>(std::move(a));
        m.alpha_lower_ = alpha_lower;
        m.alpha_upper_ = alpha_upper;
        return m;
    }

    static DynamicsModel invariant_dense(const Eigen::MatrixXd& a,
                                         double alpha_lower,
                                         double alpha_upper) {
        return invariant(a.sparseView(), alpha_lower, alpha_upper);
    }

    static DynamicsModel varying(int dim,
                                 std::function<Eigen::MatrixXd(int)> a_of_k,
                                 double alpha_lower, double alpha_upper) {
        DynamicsModel m;
        m.dim_ = dim;
        m.fn_ = std::move(a_of_k);
        m.alpha_lower_ = alpha_lower;
        m.alpha_upper_ = alpha_upper;
        return m;
    }

    int dim() const { return dim_; }
    bool time_invariant() const { return sparse_ != nullptr; }
    double alpha_lower() const { return alpha_lower_; }
    double alpha_upper() const { return alpha_upper_; }

    void set_assumption_bounds(double lo, double hi) {
        alpha_lower_ = lo;
        alpha_upper_ = hi;
    }

    /// Dense copy of A_k.
    Eigen::MatrixXd matrix(int k) const {
        if (k < 1) throw std::invalid_argument("transition index must be >= 1");
        if (sparse_) return Eigen::MatrixXd(*sparse_);
        return fn_(k);
    }

    Eigen::VectorXd apply(int k, const Eigen::VectorXd& v) const {
        if (sparse_) return *sparse_ * v;
        return matrix(k) * v;
    }

    Eigen::MatrixXd apply_left(int k, const Eigen::MatrixXd& x) const {
        if (sparse_) return *sparse_ * x;
        return matrix(k) * x;
    }

    /// A_k S A_k', symmetrized.
    Eigen::MatrixXd congruence(int k, const Eigen::MatrixXd& s) const {
        if (sparse_) {
            const Eigen::MatrixXd t = *sparse_ * s;
            return numerics::symmetrized(t * sparse_->transpose());
        }
        const Eigen::MatrixXd a = matrix(k);
        return numerics::symmetrized(a * s * a.transpose());
    }

private:
    int dim_ = 0;
    std::shared_ptr<const Eigen::SparseMatrix<double>> sparse_;
    std::function<Eigen::MatrixXd(int)> fn_;
    double alpha_lower_ = 0.0;
    double alpha_upper_ = std::numeric_limits<double>::infinity();
};

/// A[k:t] = A_k A_{k-1} ... A_t; identity when k < t.
inline Eigen::MatrixXd state_propagation_matrix(const DynamicsModel& model,
                                                int k, int t) {
    const Eigen::MatrixXd id =
        Eigen::MatrixXd::Identity(model.dim(), model.dim());
    if (k < t) return id;
    if (t < 1) throw std::invalid_argument("product start must be >= 1");
    Eigen::MatrixXd p = id;
    for (int s = t; s <= k; ++s) p = model.apply_left(s, p);
    return p;
}

/// Incrementally cached prefix products A[k:1].
class PropagationCache {
public:
    explicit PropagationCache(const DynamicsModel& model) : model_(&model) {
        prods_.push_back(
            Eigen::MatrixXd::Identity(model.dim(), model.dim()));
    }

    /// A[k:1]; extends the cache as needed (A[k+1:1] = A_{k+1} A[k:1]).
    const Eigen::MatrixXd& up_to(int k) {
        if (k < 0) throw std::invalid_argument("negative step");
        while (static_cast<int>(prods_.size()) <= k)
            prods_.push_back(model_->apply_left(
                static_cast<int>(prods_.size()), prods_.back()));
        return prods_[static_cast<std::size_t>(k)];
    }

private:
    const DynamicsModel* model_;
    std::vector<Eigen::MatrixXd> prods_;
};

/// Non-stochastic disturbance sequence delta_k plus the running sum of
/// its norms (the realized budget).
struct DisturbanceSchedule {
    DisturbanceType type = DisturbanceType::external;
    std::function<Eigen::VectorXd(int)> delta;
    double realized_budget = 0.0;

    static DisturbanceSchedule zero(DisturbanceType t, int dim) {
        DisturbanceSchedule s;
        s.type = t;
        s.delta = [dim](int) { return Eigen::VectorXd::Zero(dim).eval(); };
        return s;
    }
};

/// Nominal and disturbed state at one step.  Only the disturbed state
/// is measurable; the nominal one is kept for diagnostics and for the
/// regret of externally-disturbed runs.
struct EnvironmentState {
    Eigen::VectorXd phi;        // nominal
    Eigen::VectorXd phi_tilde;  // disturbed (measurable)
    int step = 0;

    static EnvironmentState initial(Eigen::VectorXd phi0) {
        EnvironmentState s;
        s.phi_tilde = phi0;
        s.phi = std::move(phi0);
        return s;
    }

    bool any_negative() const {
        return (phi.array() < 0.0).any() || (phi_tilde.array() < 0.0).any();
    }
};

/// Advances both trajectories one step and accrues the realized budget.
/// For internal disturbances the norm of the disturbed state is checked
/// against `state_bound`; violating it is a hard error.
inline EnvironmentState propagate(
    const EnvironmentState& s, const DynamicsModel& model,
    DisturbanceSchedule& schedule,
    double state_bound = std::numeric_limits<double>::infinity()) {
    const int next = s.step + 1;
    Eigen::VectorXd d = schedule.delta(s.step);
    if (d.size() != s.phi.size())
        throw std::invalid_argument("disturbance dimension mismatch");
    schedule.realized_budget += d.norm();

    EnvironmentState out;
    out.step = next;
    out.phi = model.apply(next, s.phi);
    if (schedule.type == DisturbanceType::external) {
        out.phi_tilde = out.phi + d;
    } else {
        out.phi_tilde = model.apply(next, s.phi_tilde) + d;
        if (!(out.phi_tilde.norm() <= state_bound))
            throw std::runtime_error(
                "disturbed state bound violated at step " +
                std::to_string(next));
    }
    return out;
}

struct Assumption1Report {
    double empirical_alpha_lower = 0.0;
    double empirical_alpha_upper = 0.0;
    double configured_alpha_lower = 0.0;
    double configured_alpha_upper = 0.0;
    int samples = 0;
    bool pass = false;
};

/// Samples products A[k:t] up to `horizon` and reports the extreme
/// eigenvalues of A[k:t]' A[k:t] against the model's declared bounds.
/// Report only; callers decide what a failure means.
inline Assumption1Report verify_assumption1(const DynamicsModel& model,
                                            int horizon, int samples,
                                            std::uint64_t seed = 0) {
    Assumption1Report rep;
    rep.configured_alpha_lower = model.alpha_lower();
    rep.configured_alpha_upper = model.alpha_upper();
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;

    if (model.time_invariant()) {
        // Products depend only on the span length; enumerate spans when
        // that is no more work than sampling them.
        std::vector<int> spans;
        if (horizon <= samples) {
            for (int s = 1; s <= horizon; ++s) spans.push_back(s);
        } else {
            std::set<int> picked;
            rng::Stream st(seed, rng::domain::testing, 0xA55u, 0);
            while (static_cast<int>(picked.size()) < samples)
                picked.insert(1 + static_cast<int>(st.next_u64() %
                                                   static_cast<std::uint64_t>(
                                                       horizon)));
            spans.assign(picked.begin(), picked.end());
        }
        Eigen::MatrixXd p =
            Eigen::MatrixXd::Identity(model.dim(), model.dim());
        int built = 0;
        for (int s : spans) {
            for (; built < s; ++built) p = model.apply_left(1, p);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
                numerics::symmetrized(p.transpose() * p),
                Eigen::EigenvaluesOnly);
            lo = std::min(lo, es.eigenvalues().minCoeff());
            hi = std::max(hi, es.eigenvalues().maxCoeff());
            ++rep.samples;
        }
    } else {
        rng::Stream st(seed, rng::domain::testing, 0xA55u, 1);
        for (int i = 0; i < samples; ++i) {
            const int k = 1 + static_cast<int>(
                                  st.next_u64() %
                                  static_cast<std::uint64_t>(horizon));
            const int t = 1 + static_cast<int>(
                                  st.next_u64() %
                                  static_cast<std::uint64_t>(k));
            const Eigen::MatrixXd p = state_propagation_matrix(model, k, t);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
                numerics::symmetrized(p.transpose() * p),
                Eigen::EigenvaluesOnly);
            lo = std::min(lo, es.eigenvalues().minCoeff());
            hi = std::max(hi, es.eigenvalues().maxCoeff());
            ++rep.samples;
        }
    }
    rep.empirical_alpha_lower = lo;
    rep.empirical_alpha_upper = hi;
    const double tol = 1e-9;
    rep.pass = lo + tol >= rep.configured_alpha_lower &&
               hi <= rep.configured_alpha_upper + tol;
    return rep;
}

namespace detail {

/// Extreme singular values of a sparse matrix by power iteration on
/// A'A and its inverse (via sparse LU).  Deterministic start vector.
inline std::pair<double, double> extreme_singular_values(
    const Eigen::SparseMatrix<double>& a) {
    const int n = static_cast<int>(a.rows());
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    v[0] += 0.5;  // break symmetry with the constant vector
    v.normalize();
    double lam = 0.0;
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd w = a.transpose() * (a * v);
        const double norm = w.norm();
        if (norm == 0.0) return {0.0, 0.0};
        w /= norm;
        const double diff = (w - v).norm();
        v = w;
        lam = norm;
        if (diff < 1e-14) break;
    }
    const double smax = std::sqrt(lam);

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    Eigen::SparseMatrix<double> ac = a;
    ac.makeCompressed();
    lu.compute(ac);
    if (lu.info() != Eigen::Success) return {0.0, smax};
    Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
    u[n - 1] += 0.5;
    u.normalize();
    double lam_inv = 0.0;
    for (int it = 0; it < 200; ++it) {
        // (A'A)^{-1} u = A^{-1} A^{-T} u
        Eigen::VectorXd w = lu.adjoint().solve(u);
        w = lu.solve(w);
        const double norm = w.norm();
        if (norm == 0.0) break;
        w /= norm;
        const double diff = (w - u).norm();
        u = w;
        lam_inv = norm;
        if (diff < 1e-14) break;
    }
    const double smin = lam_inv > 0.0 ? 1.0 / std::sqrt(lam_inv) : 0.0;
    return {smin, smax};
}

}  // namespace detail

/// First-order upwind, zero-flux, explicit-Euler discretization of
/// scalar convection-diffusion on the grid (cell size 1).  Columns sum
/// to one, so total mass is conserved before renormalization.  With
/// `renormalize` the matrix is scaled by one scalar so its largest
/// singular value is at most 1.
inline DynamicsModel build_convection_diffusion(
    const GridSpec& grid, double diffusion,
    const std::array<double, 2>& velocity, double dt,
    bool renormalize = true) {
    if (!(diffusion >= 0.0))
        throw std::invalid_argument("diffusion must be nonnegative");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const double vx = velocity[0];
    const double vy = velocity[1];
    const double cfl = dt * (4.0 * diffusion + std::abs(vx) + std::abs(vy));
    if (!(cfl < 1.0))
        throw std::invalid_argument(
            "explicit scheme unstable: dt*(4*diffusion + |vx| + |vy|) = " +
            std::to_string(cfl) + " >= 1");

    const int d = grid.side;
    const int n = grid.cells();
    const double kappa = dt * diffusion;
    const double cx = dt * vx;
    const double cy = dt * vy;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(5 * n));
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            const int j = grid.index(r, c);
            double self = 1.0;
            auto add = [&](int rr, int cc, double w) {
                trip.emplace_back(grid.index(rr, cc), j, w);
            };
            // Diffusive exchange with each existing neighbor.
            if (r > 0) {
                add(r - 1, c, kappa);
                self -= kappa;
            }
            if (r + 1 < d) {
                add(r + 1, c, kappa);
                self -= kappa;
            }
            if (c > 0) {
                add(r, c - 1, kappa);
                self -= kappa;
            }
            if (c + 1 < d) {
                add(r, c + 1, kappa);
                self -= kappa;
            }
            // Upwind advection: mass |c| flows to the downwind neighbor;
            // at a downwind wall nothing leaves (zero flux).
            if (cx > 0.0 && c + 1 < d) {
                add(r, c + 1, cx);
                self -= cx;
            } else if (cx < 0.0 && c > 0) {
                add(r, c - 1, -cx);
                self -= -cx;
            }
            if (cy > 0.0 && r + 1 < d) {
                add(r + 1, c, cy);
                self -= cy;
            } else if (cy < 0.0 && r > 0) {
                add(r - 1, c, -cy);
                self -= -cy;
            }
            trip.emplace_back(j, j, self);
        }
    }
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();

    auto [smin, smax] = detail::extreme_singular_values(a);
    if (renormalize && smax > 1.0) {
        a *= 1.0 / smax;
        smin /= smax;
        smax = 1.0;
    }
    if (!(smin > 1e-10))
        throw std::invalid_argument(
            "transition matrix singular: smallest singular value " +
            std::to_string(smin));
    return DynamicsModel::invariant(std::move(a), smin * smin, smax * smax);
}

}  // namespace seek
