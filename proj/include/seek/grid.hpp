#pragma once

#include <cmath>
#include <stdexcept>

namespace seek {

/// Square lattice of side `side`; cells are indexed 0..side^2-1 in
/// row-major order.
struct GridSpec {
    int side = 1;

    explicit GridSpec(int d = 1) : side(d) {
        if (d < 1) throw std::invalid_argument("grid side must be positive");
    }

    int cells() const { return side * side; }
    int row(int index) const { return index / side; }
    int col(int index) const { return index % side; }
    int index(int r, int c) const { return r * side + c; }

    bool contains(int index) const { return index >= 0 && index < cells(); }

    /// Euclidean distance between cell centers, in cell units.
    double distance(int a, int b) const {
        const double dr = row(a) - row(b);
        const double dc = col(a) - col(b);
        return std::sqrt(dr * dr + dc * dc);
    }

    /// Squared center distance, exact in integers.
    int distance_sq(int a, int b) const {
        const int dr = row(a) - row(b);
        const int dc = col(a) - col(b);
        return dr * dr + dc * dc;
    }
};

}  // namespace seek
