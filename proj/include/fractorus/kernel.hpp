#pragma once

// Periodic heat kernel and the singular kernel K_s on flat tori.
//
// Two independent representations back each object. The heat kernel is
// either the spectral series (1/vol) sum_k exp(-lambda_k t) e^{2 pi i k.(x-y)/L}
// or the Gaussian image sum sum_m (4 pi t)^{-n/2} exp(-|x-y+Lm|^2/(4t));
// Poisson summation says they agree, and the pair is kept as a mutual
// cross-check. K_s is either the periodized Riesz sum
// alpha_{n,s} sum_m |x-y+Lm|^{-(n+s)} or heat-kernel subordination
// (s/2)/Gamma(1-s/2) int_0^inf H(x,y,t) t^{-1-s/2} dt, with the t -> inf
// plateau of H split off and integrated in closed form.
//
// Grid operations never call the pointwise evaluators in a loop; they use
// an Ewald-split table of K_s over all grid differences (short-range
// incomplete-gamma images plus one inverse FFT for the smooth long-range
// part), which is the same lattice sum rearranged analytically.

#include "fractorus/torus.hpp"

#include <vector>

namespace fractorus {

enum class HeatMethod { spectral, lattice };
enum class KsMethod { lattice_riesz, subordination };

struct KernelParams {
    double s = 0.5;
    int m_max = 50;             // image cutoff for direct lattice sums
    double spectral_tol = 1e-18; // drop spectral terms below this factor
    int quad_pts_per_unit = 14; // trapezoid density on the log-time axis
};

double heat_kernel(const FlatTorus& torus, const Pt& x, const Pt& y, double t,
                   HeatMethod method, const KernelParams& params = {});

double ks_kernel(const FlatTorus& torus, const Pt& x, const Pt& y,
                 const KernelParams& params, KsMethod method);

// K_s at every grid difference (flat index = difference index); the zero
// difference slot holds 0 and is handled by the quadrature corrections.
std::vector<double> kernel_table(const Grid& grid, double s);

// K_s evaluated at grid differences displaced by a constant off-lattice
// offset: table[d] = K_s(x_d + offset). The offset must not be a lattice
// vector, so every entry (including d = 0) is finite. Used by quadratures
// whose base point sits between grid points, e.g. at a cell face midpoint.
std::vector<double> kernel_table(const Grid& grid, double s, const Pt& offset);

struct ComparabilityRow {
    double separation;
    double ratio;      // K_s(d) / (alpha_{n,s} d^{-(n+s)})
    double method_gap; // |lattice - subordination| / lattice
};

// Rows over log-spaced separations in [lo, hi] (fractions of min side).
std::vector<ComparabilityRow> comparability_report(const FlatTorus& torus,
                                                   const KernelParams& params,
                                                   int rows = 12, double lo = 0.05,
                                                   double hi = 0.5);

} // namespace fractorus
