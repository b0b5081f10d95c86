#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "seek/grid.hpp"
#include "seek/rng.hpp"

namespace seek {

/// Identical circular footprint for every agent; per-agent noise
/// variance v^i on each covered cell.
struct SensorModel {
    int agent_count = 1;
    double radius = 0.0;
    std::vector<double> variances;  // size agent_count

    double v_lower() const {
        return *std::min_element(variances.begin(), variances.end());
    }
    double v_upper() const {
        return *std::max_element(variances.begin(), variances.end());
    }
};

/// One step's stacked measurements in information form.  The
/// information matrix is diagonal for selection-matrix sensing, so only
/// its diagonal and support are stored; the full H is materialized on
/// demand for tests.
struct MeasurementBatch {
    int step = 0;
    std::vector<std::vector<int>> coverage;  // per agent, ascending cells
    std::vector<Eigen::VectorXd> observations;  // per agent, coverage order
    std::vector<double> variances;              // per agent
    Eigen::VectorXd info_vec;   // y = H' V^{-1} z
    Eigen::VectorXd info_diag;  // diagonal of Y = H' V^{-1} H
    std::vector<int> support;   // ascending union of covered cells

    int total_rows() const {
        int m = 0;
        for (const auto& c : coverage) m += static_cast<int>(c.size());
        return m;
    }
};

/// Cells whose center lies within Euclidean distance `radius` of the
/// agent's cell, ascending; always contains the agent's own cell.
inline std::vector<int> coverage_set(const GridSpec& grid, int position,
                                     double radius) {
    if (!grid.contains(position))
        throw std::invalid_argument("position out of range");
    const int r0 = grid.row(position);
    const int c0 = grid.col(position);
    const int reach = static_cast<int>(std::floor(radius));
    const double r2 = radius * radius;
    std::vector<int> out;
    for (int r = std::max(0, r0 - reach);
         r <= std::min(grid.side - 1, r0 + reach); ++r) {
        for (int c = std::max(0, c0 - reach);
             c <= std::min(grid.side - 1, c0 + reach); ++c) {
            const int dr = r - r0;
            const int dc = c - c0;
            if (static_cast<double>(dr * dr + dc * dc) <= r2)
                out.push_back(grid.index(r, c));
        }
    }
    return out;  // row-major scan is already ascending
}

/// Builds the information pair from explicit coverage sets and noisy
/// observations drawn from the (step, agent)-addressed noise streams.
inline MeasurementBatch measure_with_coverage(
    const Eigen::VectorXd& phi_tilde,
    std::vector<std::vector<int>> coverage, const SensorModel& sensors,
    int step, std::uint64_t trial_seed) {
    const Eigen::Index n = phi_tilde.size();
    MeasurementBatch b;
    b.step = step;
    b.coverage = std::move(coverage);
    b.variances = sensors.variances;
    b.info_vec = Eigen::VectorXd::Zero(n);
    b.info_diag = Eigen::VectorXd::Zero(n);

    for (std::size_t i = 0; i < b.coverage.size(); ++i) {
        const auto& cells = b.coverage[i];
        const double v = sensors.variances[i];
        const double sd = std::sqrt(v);
        rng::Stream noise(trial_seed, rng::domain::noise,
                          static_cast<std::uint32_t>(step),
                          static_cast<std::uint32_t>(i));
        Eigen::VectorXd z(static_cast<Eigen::Index>(cells.size()));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            z[static_cast<Eigen::Index>(j)] =
                phi_tilde[cells[j]] + sd * noise.next_gauss();
            b.info_vec[cells[j]] += z[static_cast<Eigen::Index>(j)] / v;
            b.info_diag[cells[j]] += 1.0 / v;
        }
        b.observations.push_back(std::move(z));
    }

    std::vector<int> sup;
    for (const auto& cells : b.coverage)
        sup.insert(sup.end(), cells.begin(), cells.end());
    std::sort(sup.begin(), sup.end());
    sup.erase(std::unique(sup.begin(), sup.end()), sup.end());
    b.support = std::move(sup);
    return b;
}

/// Measures at the given agent positions with the geometric footprint.
inline MeasurementBatch measure(const Eigen::VectorXd& phi_tilde,
                                const std::vector<int>& positions,
                                const SensorModel& sensors,
                                const GridSpec& grid, int step,
                                std::uint64_t trial_seed) {
    if (static_cast<int>(positions.size()) != sensors.agent_count)
        throw std::invalid_argument("positions/agent count mismatch");
    std::vector<std::vector<int>> cov;
    cov.reserve(positions.size());
    for (int p : positions)
        cov.push_back(coverage_set(grid, p, sensors.radius));
    return measure_with_coverage(phi_tilde, std::move(cov), sensors, step,
                                 trial_seed);
}

/// Dense M x N selection matrix, agent-major row order.
inline Eigen::MatrixXd materialize_H(const MeasurementBatch& batch,
                                     const GridSpec& grid) {
    const int m = batch.total_rows();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, grid.cells());
    int row = 0;
    for (const auto& cells : batch.coverage)
        for (int l : cells) h(row++, l) = 1.0;
    return h;
}

/// Stacked observation vector matching materialize_H's row order.
inline Eigen::VectorXd stacked_observations(const MeasurementBatch& batch) {
    Eigen::VectorXd z(batch.total_rows());
    Eigen::Index row = 0;
    for (const auto& zi : batch.observations) {
        z.segment(row, zi.size()) = zi;
        row += zi.size();
    }
    return z;
}

/// Per-row noise variances matching materialize_H's row order.
inline Eigen::VectorXd stacked_variances(const MeasurementBatch& batch) {
    Eigen::VectorXd v(batch.total_rows());
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < batch.coverage.size(); ++i)
        for (std::size_t j = 0; j < batch.coverage[i].size(); ++j)
            v[row++] = batch.variances[i];
    return v;
}

}  // namespace seek
