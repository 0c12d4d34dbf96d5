#pragma once

// Harmonic extension of grid fields to the half cylinder M x (0, inf) with
// the degenerate weight z^{1-s}: boundary-to-bulk profile, extension fields
// on a geometric z-ladder, the Dirichlet-to-Neumann trace map, weighted
// Dirichlet energy over the whole cylinder or a half-ball, and the scaled
// monotonicity functional Phi(R).

#include <vector>

#include "fractorus/torus.hpp"

namespace fractorus {

struct ExtensionParams {
    // Lowest ladder node z_0 = z_min_factor * min_i h_i. Small enough that
    // the first four nodes sit inside the z^s boundary layer of every
    // resolved mode (the dtn fit window), in any dimension.
    double z_min_factor = 1.0 / 20.0;
    // Geometric ratio of the ladder z_j = z_0 rho^j. The energy and the
    // harmonicity residual converge at second order in log(rho); 1.08 keeps
    // the single-mode energy bias below 0.5% at roughly a hundred slices.
    double rho = 1.08;
    // Ladder ends at the first node where the slowest nonconstant mode has
    // decayed below this.
    double top_tol = 1e-8;
    // Node density of the log-t quadrature behind g_profile.
    int quad_pts_per_unit = 12;
    // Number of low nodes entering the small-z fit U ~ u + a z^s + b z^2.
    int fit_nodes = 4;
    // Relative residual allowed in that fit before dtn refuses the ladder.
    double fit_tol = 0.1;
};

// Boundary-to-bulk multiplier
//   g_s(lambda, z) = z^s / (2^s Gamma(s/2)) int_0^inf e^{-lambda t}
//                    e^{-z^2/(4t)} t^{-1-s/2} dt,
// with g_s(0, z) = g_s(lambda, 0) = 1. A field extended mode by mode with
// this multiplier solves div(z^{1-s} grad U) = 0 with trace u. Computed by
// trapezoid in log t between doubly exponentially small tails; depends on
// (lambda, z) only through w = sqrt(lambda) z.
double g_profile(double lambda, double z, double s, const ExtensionParams& p = {});

// The default ladder for a grid: z_j = z_min_factor * max_h * rho^j, ending
// one node past the decay tolerance of the slowest nonconstant mode.
std::vector<double> z_ladder(const Grid& grid, double s, const ExtensionParams& p = {});

struct ExtensionField {
    Grid grid{FlatTorus(1, {1, 0, 0}), GridSpec{{4, 0, 0}}};
    double s = 0.5;
    ExtensionParams params;
    GridField trace;               // U(., 0), exact by g_s(lambda, 0) = 1
    std::vector<double> z_nodes;   // strictly increasing, all positive
    std::vector<GridField> slices; // slices[j] = U(., z_nodes[j])
};

ExtensionField cs_extend(const GridField& u, double s, const std::vector<double>& z_nodes,
                         const ExtensionParams& p = {});
ExtensionField cs_extend(const GridField& u, double s, const ExtensionParams& p = {});

// lim_{z->0} z^{1-s} dU/dz, estimated by least squares against the exact
// local expansion U = u + a z^s + b z^2 on the lowest fit_nodes ladder
// nodes; returns s*a. Mode by mode this equals -beta_s lambda^{s/2} u_hat,
// i.e. dtn(u) = -beta_s (-Delta)^{s/2} u.
GridField dtn(const ExtensionField& ext);

// beta_s int z^{1-s} |grad U|^2, globally or over the half-ball of radius R
// around (center, 0) with cell-center membership. The z-integral pairs an
// analytic boundary-layer segment [0, z_0] (exact on the fit expansion)
// with a two-point rule per ladder segment exact on z^s and z^2.
double extension_energy(const ExtensionField& ext);
double extension_energy(const ExtensionField& ext, const Pt& center, double R);

// Relative L2 residual of the discrete degenerate-harmonic equation
// div(z^{1-s} grad U) = 0 on interior ladder nodes; a ladder-quality
// diagnostic (second order in log rho).
double harmonicity_residual(const ExtensionField& ext);

struct PhiRow {
    double radius = 0.0;
    double phi = 0.0;            // sobolev_part + potential_part
    double sobolev_part = 0.0;   // R^{s-n} (2 beta_s)^{-1} int_{half-ball} z^{1-s}|grad U|^2
    double potential_part = 0.0; // R^{s-n} int_{B_R} eps^{-s} W(u)
    double quad_error = 0.0;     // sensitivity of phi to half-cell mask shifts
};

// Phi(R) = R^{s-n} ( (2 beta_s)^{-1} int_{half-ball} z^{1-s}|grad U|^2
//                    + int_{B_R} eps^{-s} W(u) ),  W(u) = (1-u^2)^2/4.
// The Dirichlet weight 1/(2 beta_s) is matched to the trace functional
// (1/2)[u]^2_spec + eps^{-s} int W, so that critical points of the trace
// energy make the numerator stationary and Phi nondecreasing on flat base
// geometry for R below the embedding scale. Radii must stay below half the
// shortest side.
std::vector<PhiRow> phi_functional(const GridField& u, double s, double epsilon,
                                   const Pt& center, const std::vector<double>& radii,
                                   const ExtensionParams& p = {});

} // namespace fractorus
