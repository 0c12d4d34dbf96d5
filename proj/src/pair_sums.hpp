#pragma once

// Masked pair-sum machinery shared by the s-perimeter and the phase-field
// energy: circular autocorrelations collapse the double sums, and the
// face sweep restores the sub-cell mass lost at jump discontinuities.
// Internal to the library.

#include "fractorus/perimeter.hpp"
#include "fractorus/special.hpp"
#include "fractorus/torus.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace fractorus {
namespace detail {

inline bool cubic_cells(const Grid& g) {
    const double h0 = g.h(0);
    for (int i = 1; i < g.dim(); ++i)
        if (std::abs(g.h(i) - h0) > 1e-12 * h0) return false;
    return true;
}

inline bool same_grid(const Grid& a, const Grid& b) {
    if (a.dim() != b.dim()) return false;
    for (int i = 0; i < a.dim(); ++i)
        if (a.npts(i) != b.npts(i) ||
            std::abs(a.torus().side(i) - b.torus().side(i)) >
                1e-12 * a.torus().side(i))
            return false;
    return true;
}

// v(d) = (sqrt(vol)/N) sum_x a_x a_{x+d}.
inline GridField autocorrelation(const GridField& a) {
    SpectralField sa = to_spectral(a);
    for (auto& c : sa.c) c = std::complex<double>(std::norm(c), 0.0);
    return to_physical(sa);
}

// (1/4) sum over ordered pairs x != y of (u_x - u_y)^2 K(x - y) w^2, the
// raw quarter pair sum, via one circular autocorrelation.
inline double quarter_pair_sum(const GridField& u, const std::vector<double>& table) {
    const Grid& g = u.grid;
    const GridField v = autocorrelation(u);
    double acc = 0.0;
    for (std::size_t d = 1; d < g.size(); ++d) acc += table[d] * (v[0] - v[d]);
    const double w = g.weight();
    const double n_over_sqrtvol =
        static_cast<double>(g.size()) / std::sqrt(g.torus().volume());
    return std::max(0.5 * w * w * n_over_sqrtvol * acc, 0.0);
}

// Same quarter sum restricted to pairs whose endpoints BOTH carry mask
// q = 1 (q is a 0/1 field): (u_x - u_y)^2 q_x q_y = 2 (q_x q_y - p_x p_y)
// with p = u q, so two autocorrelations collapse the double sum.
inline double quarter_masked_sum(const GridField& u, const GridField& q,
                                 const std::vector<double>& table) {
    const Grid& g = u.grid;
    GridField p = q;
    for (std::size_t i = 0; i < g.size(); ++i) p.v[i] *= u.v[i];
    const GridField vq = autocorrelation(q);
    const GridField vp = autocorrelation(p);
    double acc = 0.0;
    for (std::size_t d = 1; d < g.size(); ++d) acc += table[d] * (vq[d] - vp[d]);
    const double w = g.weight();
    const double n_over_sqrtvol =
        static_cast<double>(g.size()) / std::sqrt(g.torus().volume());
    return std::max(0.5 * w * w * n_over_sqrtvol * acc, 0.0);
}

inline GridField region_mask(const SetIndicator& omega) {
    GridField q(omega.field.grid, 0.0);
    for (std::size_t i = 0; i < q.size(); ++i)
        q.v[i] = omega.field.v[i] > 0.0 ? 1.0 : 0.0;
    return q;
}

// Sum of weight(i, j) over grid faces where u jumps, axis by axis.
template <class W>
double face_sum(const GridField& u, W weight) {
    const Grid& g = u.grid;
    double acc = 0.0;
    for (int a = 0; a < g.dim(); ++a)
        for (std::size_t i = 0; i < g.size(); ++i) {
            std::array<int, 3> m = g.unflatten(i);
            m[a] = (m[a] + 1) % g.npts(a);
            const std::size_t j = g.flatten(m);
            if (u.v[i] != u.v[j]) acc += weight(i, j);
        }
    return acc;
}

// Sub-cell pair mass missing at one unit-jump interface face; exact for
// flat axis-aligned interfaces on cubic cells, zero otherwise.
inline double face_defect_scale(const Grid& g, double s) {
    if (!cubic_cells(g)) return 0.0;
    const int n = g.dim();
    return 2.0 * alpha_ns(n, s) * interface_defect_constant(n, s) *
           std::pow(g.h(0), static_cast<double>(n) - s);
}

} // namespace detail
} // namespace fractorus
