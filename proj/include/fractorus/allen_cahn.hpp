#pragma once

// The phase-field functional E(u) = (1/4) iint (u(x)-u(y))^2 K_s +
// eps^{-s} int (1-u^2)^2 / 4 and its critical-point machinery: residual,
// semi-implicit gradient flow, second variation with Morse index, the
// one-dimensional layer profile, and the finite-index diagnostics (total
// variation, phase density, potential decay, almost stability).
//
// Two quadratures back the Sobolev part. Smooth phase fields use the
// spectral form (half the spectral seminorm), whose discrete gradient is
// exactly the spectral residual, so energy descent and gradient
// consistency hold to roundoff. Fields that are exactly +-1 valued use
// the masked pair sums with the calibrated face defect instead, which
// makes the energy of an indicator agree exactly with the corresponding
// (relative) s-perimeter; the spectral form would suffer Gibbs loss on
// jumps. Region-restricted energies always take the pair-sum route, since
// masking has no spectral form.

#include "fractorus/perimeter.hpp"
#include "fractorus/torus.hpp"

#include <vector>

namespace fractorus {

struct ACParams {
    double s = 0.5;
    double epsilon = 0.05;      // interface length scale; >= 2h to resolve
    double flow_dt = 0.25;      // initial step, halved when energy rises
    double tol_residual = 1e-8; // sup-norm stopping target
    int max_iters = 20000;
};

struct EnergyBreakdown {
    double sobolev = 0.0;
    double potential = 0.0;
    double total = 0.0;
};

struct ACSolution {
    GridField u;
    ACParams params;
    double residual_norm = 0.0;
    EnergyBreakdown energy;
    int iterations = 0;
    bool converged = false;
    std::vector<double> energy_trace; // energy after each accepted step
};

// Energy over the whole torus, or relative to omega (pairs with both
// endpoints outside omega are dropped and the potential integrates over
// omega only). Values beyond [-1, 1] are clamped first (with a warning).
EnergyBreakdown energy(const GridField& u, const ACParams& params);
EnergyBreakdown energy(const GridField& u, const ACParams& params,
                       const SetIndicator& omega);

// (-Delta)^{s/2} u + eps^{-s} (u^3 - u) by the spectral multiplier: the
// exact gradient of the smooth-branch energy.
GridField residual(const GridField& u, const ACParams& params);

// Semi-implicit descent: the fractional Laplacian implicit, the well
// explicit; steps that raise the energy are rejected and the step size
// halved. Stops at sup|residual| <= tol_residual or max_iters; converged
// additionally requires sup|u| < 1 strictly.
ACSolution gradient_flow(const GridField& u0, const ACParams& params);

// xi -> (-Delta)^{s/2} xi + eps^{-s} (3u^2 - 1) xi, restricted to fields
// supported in omega (input and image are zeroed outside).
GridField second_variation_apply(const GridField& u, const GridField& xi,
                                 const ACParams& params);
GridField second_variation_apply(const GridField& u, const GridField& xi,
                                 const ACParams& params,
                                 const SetIndicator& omega);

// Count of eigenvalues below -1e-8 eps^{-s} of the second variation on
// the subspace supported in omega, by a dense symmetric eigensolve over
// that subspace (refused above dimension 4096). A count larger than k_max
// is reported as k_max, a lower bound.
int morse_index(const GridField& u, const ACParams& params, int k_max);
int morse_index(const GridField& u, const ACParams& params,
                const SetIndicator& omega, int k_max);

// The increasing heteroclinic of (-Delta)^{s/2} v + v^3 - v = 0 on a
// circle of circumference 2 * domain_half_length (two antipodal
// transitions, the periodic proxy for the line layer), centered so the
// rising zero sits at x = 0: v(0) = 0, odd, strictly increasing on the
// half period between the extrema at -L/4 and L/4.
GridField layer_1d(double s, double domain_half_length, int npts);

// int_{B_{R/2}(center)} |grad u|, spectral gradient, min-image ball.
double bv_probe(const GridField& u, const Pt& center, double R);

struct DensityReport {
    double deficit_plus = 0.0;  // R^{-n} int_{B_R} |1 - u|
    double deficit_minus = 0.0; // R^{-n} int_{B_R} |1 + u|
    bool plus_meets = false;    // {u >= -9/10} meets B_{R/2}
    bool minus_meets = false;   // {u <= +9/10} meets B_{R/2}
};
DensityReport density_probe(const GridField& u, const Pt& center, double R);

// Least-squares slope of log potential energy against log eps across a
// family solved at decreasing eps and fixed s.
double potential_decay_probe(const std::vector<ACSolution>& family);

struct StabilityRegionReport {
    int region = -1;           // first passing region, -1 when none pass
    double margin = 0.0;       // min over the dictionary of Q + Lambda ||.||_1^2 there
    bool passed = false;
    std::vector<double> margins; // the same minimum for every region
    double lambda = 0.0;         // m * max cross-region kernel value
};

// For each region, minimizes the second-variation form over a dictionary
// of bump functions supported inside and checks Q[xi] >= -Lambda
// ||xi||_1^2 with Lambda = m max_{i != j} sup K over cross pairs; a
// solution of index <= m must have at least one passing region.
StabilityRegionReport almost_stability_probe(const GridField& u,
                                             const ACParams& params,
                                             const std::vector<SetIndicator>& regions);

} // namespace fractorus
