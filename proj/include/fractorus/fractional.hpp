#pragma once

// Fractional Laplacian on flat tori and the three equivalent H^{s/2}
// energies, with measured reconciliation of their normalizing constants.
//
// The three routes to the same seminorm:
//   spectral         sum_k lambda_k^{s/2} |u_hat_k|^2
//   double integral  iint (u(x)-u(y))^2 K_s(x,y) dV dV
//   extension        beta_s int_{z>0} z^{1-s} |grad U|^2, U the harmonic
//                    extension of u in the weighted half space
// The double-integral form carries twice the spectral one (expanding the
// square gives 2 int u (-Delta)^{s/2} u), and the extension route carries
// beta_s^2 relative to the spectral one (the trace Dirichlet integral is
// beta_s lambda^{s/2} per unit mode mass, and the energy is weighted by
// another beta_s). Rather than bake these in, seminorm_all reports all
// three values and their measured ratios.
//
// The grid double integral never loops over pairs: with a translation
// invariant kernel table K(d) it collapses to an inner product of K with
// the circular autocorrelation of u (two transforms), and the integral
// operator is a circular convolution. Both add back the O(h^{2-s})
// singular-cell defect with the analytic lattice constant so the midpoint
// quadrature stays second-order accurate through the kernel singularity.

#include "fractorus/extension.hpp"
#include "fractorus/torus.hpp"

namespace fractorus {

enum class SeminormMethod { spectral, double_integral, extension };

struct IntegralOpParams {
    // add the -(A_n(s)/2) h^{2-s} Laplacian term that restores the
    // principal value through the singular cell (cubic cells only)
    bool singular_correction = true;
};

struct SeminormBreakdown {
    double spectral = 0.0;
    double double_integral = 0.0;
    double extension = 0.0;
    // measured ratios: double_integral/spectral and extension/double_integral
    // (zero when the denominator vanishes, e.g. constant fields)
    double ratio_double_spectral = 0.0;
    double ratio_extension_double = 0.0;
};

// (-Delta)^{s/2} u by the spectral multiplier lambda_k^{s/2}. Warns on
// stderr when the top-quartile frequency band carries more than 1% of the
// H^{s/2} energy (the field is then under-resolved on this grid).
GridField frac_laplacian_spectral(const GridField& u, double s);

// (-Delta)^{s/2} u as the principal-value kernel sum
// sum_y (u(x)-u(y)) K_s(x,y) w, evaluated as a circular convolution with
// the Ewald kernel table plus the singular-cell Taylor correction.
GridField frac_laplacian_integral(const GridField& u, double s,
                                  const IntegralOpParams& params = {});

// H^{s/2} seminorm by one of the three routes. ext_params only affects the
// extension route.
double seminorm(const GridField& u, double s, SeminormMethod method,
                const ExtensionParams& ext_params = {});

// All three routes plus their measured ratios.
SeminormBreakdown seminorm_all(const GridField& u, double s,
                               const ExtensionParams& ext_params = {});

// JSON object {spectral, double_integral, extension, ratios:[...]}.
std::string seminorm_json(const SeminormBreakdown& b);

} // namespace fractorus
