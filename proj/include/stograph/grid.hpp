#pragma once

#include <algorithm>
#include <cmath>

namespace stograph {

/// Wrap a real number into [0,1).
inline double wrap_unit(double x) {
    double y = x - std::floor(x);
    if (y >= 1.0) y = 0.0;  // guards x = -1e-18 style results
    return y;
}

/// Circle distance between two points of [0,1).
inline double circle_distance(double a, double b) {
    double d = std::fabs(a - b);
    return std::min(d, 1.0 - d);
}

// Cell index (0-based) for the partition I_1 = [0,1/n], I_i = ((i-1)/n, i/n].
// The first cell is closed, all others are left-open right-closed.
inline int paper_cell(double z, int n) {
    if (z <= 1.0 / n) return 0;
    int i = static_cast<int>(std::ceil(z * n)) - 1;
    return std::min(i, n - 1);
}

/// Midpoint of cell k in an n-cell uniform partition of [0,1].
inline double cell_midpoint(int k, int n) { return (k + 0.5) / n; }

// Row whose midpoint (k+1/2)/nz is nearest to z.  Boundary ties resolve to
// the lower row, matching the right-closed cell convention of paper_cell.
inline int nearest_row(double z, int nz) {
    int k = static_cast<int>(std::ceil(z * nz - 1.0));  // round-half-down of z*nz - 1/2
    return std::clamp(k, 0, nz - 1);
}

}  // namespace stograph
