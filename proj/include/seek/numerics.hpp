#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace seek {

/// Thrown when a matrix that must be symmetric positive definite cannot
/// be factorized.  `step` carries the originating filter step when the
/// failure happens inside a recursion, -1 otherwise.
class covariance_singular_error : public std::runtime_error {
public:
    explicit covariance_singular_error(int step_index = -1)
        : std::runtime_error(step_index < 0
                                 ? std::string("covariance singular")
                                 : "covariance singular at step " +
                                       std::to_string(step_index)),
          step(step_index) {}
    int step;
};

namespace numerics {

inline void require_same_size(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& d) {
    if (x.size() != d.size())
        throw std::invalid_argument("dimension mismatch: " +
                                    std::to_string(x.size()) + " vs " +
                                    std::to_string(d.size()));
}

inline void require_positive_diag(const Eigen::VectorXd& d) {
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (!(d[i] > 0.0))
            throw std::invalid_argument("nonpositive diagonal entry at " +
                                        std::to_string(i));
}

/// sqrt(sum_i d_i x_i^2) for a positive diagonal weight d.
inline double weighted_l2_norm(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& d) {
    require_same_size(x, d);
    require_positive_diag(d);
    return std::sqrt(d.dot(x.cwiseProduct(x)));
}

/// max_i d_i |x_i|.
inline double weighted_linf_norm(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& d) {
    require_same_size(x, d);
    require_positive_diag(d);
    if (x.size() == 0) return 0.0;
    return d.cwiseProduct(x.cwiseAbs()).maxCoeff();
}

/// sum_i d_i |x_i|.
inline double weighted_l1_norm(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& d) {
    require_same_size(x, d);
    require_positive_diag(d);
    return d.dot(x.cwiseAbs());
}

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

inline void require_symmetric(const Eigen::MatrixXd& m, double tol = 1e-9) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double skew = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (skew > tol * scale)
        throw std::invalid_argument("matrix not symmetric (skew " +
                                    std::to_string(skew) + ")");
}

/// sqrt(x' M x) for symmetric positive semidefinite M, clamped at zero
/// against round-off.
inline double mahalanobis_norm(const Eigen::VectorXd& x,
                               const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() != x.size())
        throw std::invalid_argument("dimension mismatch");
    require_symmetric(m);
    const double q = x.dot(m * x);
    return std::sqrt(std::max(0.0, q));
}

/// Relative singularity floor: eigenvalues of an SPD matrix below
/// 1e-12 times its largest diagonal entry are treated as zero.
inline double spd_floor(const Eigen::MatrixXd& m) {
    const double dmax = m.diagonal().maxCoeff();
    return 1e-12 * std::max(dmax, 0.0);
}

/// Cholesky factorization with the singularity floor applied to the
/// pivots.  Single chokepoint for every SPD factorization in the
/// project so the failure semantics stay uniform.
inline Eigen::LLT<Eigen::MatrixXd> spd_cholesky(const Eigen::MatrixXd& m,
                                                int step = -1) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw covariance_singular_error(step);
    const double floor = spd_floor(m);
    const double min_pivot = llt.matrixLLT().diagonal().minCoeff();
    if (!(min_pivot * min_pivot > floor))
        throw covariance_singular_error(step);
    return llt;
}

/// Inverse of an SPD matrix via Cholesky; the result is symmetrized.
inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, int step = -1) {
    if (m.rows() != m.cols()) throw std::invalid_argument("not square");
    const auto llt = spd_cholesky(m, step);
    Eigen::MatrixXd inv =
        llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    return symmetrized(inv);
}

/// Largest eigenvalue of a symmetric matrix.
inline double lambda_max_sym(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        symmetrized(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

/// Smallest eigenvalue of a symmetric matrix.
inline double lambda_min_sym(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        symmetrized(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace numerics
}  // namespace seek
