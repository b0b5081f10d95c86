#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "seek/environment.hpp"
#include "seek/numerics.hpp"
#include "seek/sensing.hpp"

namespace seek {

// Discounted information filter.
//
// Standard form, weights (lambda_k, omega_k), omega_{-1} = 0:
//   S_{k+1/2} = (S_k^{-1} + lambda_k Y_k)^{-1}
//   m_{k+1/2} = m_k + lambda_k S_{k+1/2} (y_k - Y_k m_k)
//   S_{k+1}   = A (S_{k+1/2}^{-1} + (omega_k - omega_{k-1}) G_k^{-1})^{-1} A'
//   m_{k+1}   = S_{k+1} A^{-T} S_{k+1/2}^{-1} m_{k+1/2}
//   G_{k+1}   = A G_k A'                        (G_0 = I)
//
// Stable form for the exponential schedule lambda_k = omega_k =
// (1/gamma)^k, carrying St_k = (1/gamma)^{k-1} S_k so nothing overflows:
//   St_{k+1/2} = (gamma St_k^{-1} + Y_k)^{-1}
//   m_{k+1/2}  = m_k + St_{k+1/2} (y_k - Y_k m_k)
//   St_{k+1}   = A (St_{k+1/2}^{-1} + (1-gamma) G_k^{-1})^{-1} A'
//   m_{k+1}    = (A - (1-gamma) St_{k+1} A^{-T} G_k^{-1}) m_{k+1/2}
//
// Both are computed in covariance form: the measurement update goes
// through the matrix inversion lemma on the (small) support of the
// diagonal Y_k, and the G^{-1} terms are folded algebraically,
//   (S^{-1} + d G^{-1})^{-1}      = S - S (S + G/d)^{-1} S,
//   m_{k+1}                       = A W S_{k+1/2}^{-1} m_{k+1/2},
// so no transition or Gram inverse is ever formed.

enum class FilterForm { standard, stable };

enum class FilterMode { adaptive, discounted, undiscounted };

struct FilterState {
    Eigen::VectorXd mean;  // state estimate
    Eigen::MatrixXd cov;   // S_k (standard) or St_k (stable)
    Eigen::MatrixXd gram;  // G_k = A[k:1] A[k:1]'
    int step = 0;
    FilterForm form = FilterForm::standard;
    double gamma = 1.0;  // stable form only

    static FilterState standard(Eigen::VectorXd mean0,
                                Eigen::MatrixXd cov0) {
        FilterState s;
        s.gram = Eigen::MatrixXd::Identity(cov0.rows(), cov0.cols());
        s.mean = std::move(mean0);
        s.cov = std::move(cov0);
        s.form = FilterForm::standard;
        return s;
    }

    /// The stable form starts from St_0 = gamma * S_0.
    static FilterState stable(Eigen::VectorXd mean0,
                              const Eigen::MatrixXd& cov0, double gamma) {
        if (!(gamma > 0.0 && gamma <= 1.0))
            throw std::invalid_argument("gamma must lie in (0, 1]");
        FilterState s;
        s.gram = Eigen::MatrixXd::Identity(cov0.rows(), cov0.cols());
        s.mean = std::move(mean0);
        s.cov = gamma * cov0;
        s.form = FilterForm::stable;
        s.gamma = gamma;
        return s;
    }
};

struct StepWeights {
    double lambda = 1.0;
    double omega = 0.0;
    double omega_prev = 0.0;
};

namespace detail {

/// (cov^{-1} + S diag(w) S')^{-1} via the inversion lemma on the
/// support; w must be strictly positive.
inline Eigen::MatrixXd support_update(const Eigen::MatrixXd& cov,
                                      const std::vector<int>& support,
                                      const Eigen::VectorXd& w, int step) {
    const int u = static_cast<int>(support.size());
    if (u == 0) return cov;
    Eigen::MatrixXd cols(cov.rows(), u);
    for (int j = 0; j < u; ++j) cols.col(j) = cov.col(support[j]);
    Eigen::MatrixXd inner(u, u);
    for (int i = 0; i < u; ++i)
        for (int j = 0; j < u; ++j)
            inner(i, j) = cov(support[i], support[j]);
    inner.diagonal() += w.cwiseInverse();
    const Eigen::MatrixXd gain = numerics::spd_inverse(inner, step);
    return numerics::symmetrized(cov - cols * (gain * cols.transpose()));
}

/// Residual y - Y m restricted to the support.
inline Eigen::VectorXd support_residual(const MeasurementBatch& batch,
                                        const Eigen::VectorXd& mean) {
    const int u = static_cast<int>(batch.support.size());
    Eigen::VectorXd r(u);
    for (int j = 0; j < u; ++j) {
        const int l = batch.support[j];
        r[j] = batch.info_vec[l] - batch.info_diag[l] * mean[l];
    }
    return r;
}

/// cov(:, support) * r.
inline Eigen::VectorXd support_apply(const Eigen::MatrixXd& cov,
                                     const std::vector<int>& support,
                                     const Eigen::VectorXd& r) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(cov.rows());
    for (std::size_t j = 0; j < support.size(); ++j)
        out += cov.col(support[j]) * r[static_cast<Eigen::Index>(j)];
    return out;
}

/// (cov^{-1} + d gram^{-1})^{-1} = cov - cov (cov + gram/d)^{-1} cov,
/// evaluated as a Cholesky rank update so only the decaying gram
/// matrix is touched, never its inverse.
inline Eigen::MatrixXd shrink_by_gram(const Eigen::MatrixXd& cov,
                                      const Eigen::MatrixXd& gram, double d,
                                      int step) {
    Eigen::MatrixXd m = cov + gram / d;
    const auto llt = numerics::spd_cholesky(m, step);
    const Eigen::MatrixXd t =
        llt.matrixL().solve(cov);  // L^{-1} cov
    return numerics::symmetrized(cov - t.transpose() * t);
}

}  // namespace detail

/// One standard-form step.  `weights.omega` must be nondecreasing
/// across calls; schedules that shrink omega are rejected.
inline FilterState filter_step_standard(const FilterState& state,
                                        const MeasurementBatch& batch,
                                        const DynamicsModel& model,
                                        const StepWeights& weights) {
    if (state.form != FilterForm::standard)
        throw std::invalid_argument("state is not in standard form");
    if (!(weights.lambda > 0.0))
        throw std::invalid_argument("lambda must be positive");
    if (!(weights.omega >= weights.omega_prev) || !(weights.omega_prev >= 0.0))
        throw std::invalid_argument("omega schedule must be nondecreasing");
    const int k = state.step;
    const int next = k + 1;

    // Measurement update on the support of Y_k.
    Eigen::MatrixXd cov_half;
    Eigen::VectorXd mean_half;
    if (batch.support.empty()) {
        cov_half = state.cov;
        mean_half = state.mean;
    } else {
        Eigen::VectorXd w(static_cast<Eigen::Index>(batch.support.size()));
        for (std::size_t j = 0; j < batch.support.size(); ++j)
            w[static_cast<Eigen::Index>(j)] =
                weights.lambda * batch.info_diag[batch.support[j]];
        cov_half = detail::support_update(state.cov, batch.support, w, k);
        const Eigen::VectorXd r = detail::support_residual(batch, state.mean);
        mean_half =
            state.mean +
            weights.lambda * detail::support_apply(cov_half, batch.support, r);
    }

    FilterState out;
    out.form = FilterForm::standard;
    out.step = next;
    const double d = weights.omega - weights.omega_prev;
    if (d == 0.0) {
        out.cov = model.congruence(next, cov_half);
        out.mean = model.apply(next, mean_half);
    } else {
        const Eigen::MatrixXd w =
            detail::shrink_by_gram(cov_half, state.gram, d, k);
        const Eigen::VectorXd v =
            numerics::spd_cholesky(cov_half, k).solve(mean_half);
        out.cov = model.congruence(next, w);
        out.mean = model.apply(next, w * v);
    }
    out.gram = model.congruence(next, state.gram);
    return out;
}

/// One stable-form step with forgetting factor gamma in (0, 1].  At
/// gamma = 1 this follows the exact arithmetic of the undiscounted
/// standard step.
inline FilterState filter_step_stable(const FilterState& state,
                                      const MeasurementBatch& batch,
                                      const DynamicsModel& model,
                                      double gamma) {
    if (state.form != FilterForm::stable)
        throw std::invalid_argument("state is not in stable form");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("gamma must lie in (0, 1]");
    const int k = state.step;
    const int next = k + 1;

    Eigen::MatrixXd cov_half;
    Eigen::VectorXd mean_half;
    if (batch.support.empty()) {
        cov_half = state.cov / gamma;
        mean_half = state.mean;
    } else {
        const Eigen::MatrixXd pre = state.cov / gamma;
        Eigen::VectorXd w(static_cast<Eigen::Index>(batch.support.size()));
        for (std::size_t j = 0; j < batch.support.size(); ++j)
            w[static_cast<Eigen::Index>(j)] =
                1.0 * batch.info_diag[batch.support[j]];
        cov_half = detail::support_update(pre, batch.support, w, k);
        const Eigen::VectorXd r = detail::support_residual(batch, state.mean);
        mean_half = state.mean +
                    1.0 * detail::support_apply(cov_half, batch.support, r);
    }

    FilterState out;
    out.form = FilterForm::stable;
    out.gamma = gamma;
    out.step = next;
    const double d = 1.0 - gamma;
    if (d == 0.0) {
        out.cov = model.congruence(next, cov_half);
        out.mean = model.apply(next, mean_half);
    } else {
        const Eigen::MatrixXd w =
            detail::shrink_by_gram(cov_half, state.gram, d, k);
        const Eigen::VectorXd v =
            numerics::spd_cholesky(cov_half, k).solve(mean_half);
        out.cov = model.congruence(next, w);
        out.mean = model.apply(next, w * v);
    }
    out.gram = model.congruence(next, state.gram);
    return out;
}

/// Adaptive measurement weight min{1, cap / ||Y||_S} where ||Y||_S =
/// sqrt(lambda_max(Y S Y)), computed on the support of the diagonal Y
/// only.  Returns 1 when there is no information.
inline double adaptive_lambda(const MeasurementBatch& batch,
                              const Eigen::MatrixXd& cov, double cap) {
    if (!(cap > 0.0)) throw std::invalid_argument("cap must be positive");
    const int u = static_cast<int>(batch.support.size());
    if (u == 0) return 1.0;
    Eigen::MatrixXd b(u, u);
    for (int i = 0; i < u; ++i)
        for (int j = 0; j < u; ++j)
            b(i, j) = batch.info_diag[batch.support[i]] *
                      cov(batch.support[i], batch.support[j]) *
                      batch.info_diag[batch.support[j]];
    const double norm = std::sqrt(std::max(0.0, numerics::lambda_max_sym(b)));
    if (norm == 0.0) return 1.0;
    return std::min(1.0, cap / norm);
}

/// (1/gamma)^k, the exponential weight of the discounted schedule.
inline double discounted_weight(double gamma, int k) {
    return std::pow(1.0 / gamma, k);
}

/// Running sums needed to reproduce the filter state in closed form:
///   U_k  = S_0^{-1} + sum_t lambda_t A[t:1]' Y_t A[t:1] + omega_{k-1} I
///   S_k  = A[k:1] U_k^{-1} A[k:1]'
///   m_k  = A[k:1] U_k^{-1} (S_0^{-1} m_0 + sum_t lambda_t A[t:1]' y_t)
/// Kept algebraically independent of the recursion, for cross-checks;
/// the explicit inversion limits it to small dimensions.
class ClosedFormLedger {
public:
    ClosedFormLedger(const Eigen::VectorXd& mean0,
                     const Eigen::MatrixXd& cov0)
        : sigma0_inv_(numerics::spd_inverse(cov0)),
          prior_term_(sigma0_inv_ * mean0),
          weighted_obs_(Eigen::VectorXd::Zero(mean0.size())),
          weighted_info_(
              Eigen::MatrixXd::Zero(mean0.size(), mean0.size())) {}

    /// Absorbs step t's measurements with weights (lambda_t, omega_t);
    /// `prop` must be A[t:1] for the step being absorbed.
    void absorb(const MeasurementBatch& batch, double lambda, double omega,
                const Eigen::MatrixXd& prop) {
        if (!(omega >= omega_prev_))
            throw std::invalid_argument("omega schedule must be nondecreasing");
        const int u = static_cast<int>(batch.support.size());
        if (u > 0) {
            Eigen::MatrixXd rows(u, prop.cols());
            Eigen::VectorXd d(u);
            for (int j = 0; j < u; ++j) {
                rows.row(j) = prop.row(batch.support[j]);
                d[j] = batch.info_diag[batch.support[j]];
            }
            weighted_info_.noalias() +=
                lambda * rows.transpose() * d.asDiagonal() * rows;
        }
        weighted_obs_.noalias() +=
            lambda * prop.transpose() * batch.info_vec;
        omega_prev_ = omega;
        ++steps_;
    }

    int steps() const { return steps_; }
    double omega_prev() const { return omega_prev_; }

    /// Accumulated information matrix U_k for the current step count.
    Eigen::MatrixXd info_matrix() const {
        Eigen::MatrixXd u = sigma0_inv_ + weighted_info_;
        u.diagonal().array() += omega_prev_;
        return u;
    }

    /// Closed-form (mean, covariance) given prop = A[k:1] at k = steps().
    std::pair<Eigen::VectorXd, Eigen::MatrixXd> state_at(
        const Eigen::MatrixXd& prop) const {
        const Eigen::MatrixXd inv = numerics::spd_inverse(info_matrix());
        Eigen::MatrixXd cov =
            numerics::symmetrized(prop * inv * prop.transpose());
        Eigen::VectorXd mean = prop * (inv * (prior_term_ + weighted_obs_));
        return {std::move(mean), std::move(cov)};
    }

private:
    Eigen::MatrixXd sigma0_inv_;
    Eigen::VectorXd prior_term_;
    Eigen::VectorXd weighted_obs_;
    Eigen::MatrixXd weighted_info_;
    double omega_prev_ = 0.0;
    int steps_ = 0;
};

/// Closed-form state at step k via the ledger and the cached prefix
/// products.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> closed_form_oracle(
    const ClosedFormLedger& ledger, PropagationCache& cache, int k) {
    if (ledger.steps() != k)
        throw std::invalid_argument("ledger not advanced to requested step");
    return ledger.state_at(cache.up_to(k));
}

}  // namespace seek
