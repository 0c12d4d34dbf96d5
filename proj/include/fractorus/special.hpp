#pragma once

// Closed-form constants of the fractional kernel calculus plus the small
// special-function toolbox they need. Everything routes through lgamma to
// stay stable for the whole admissible range s in (0, 2).

#include <functional>

namespace fractorus {

// Coefficient of the free-space kernel alpha_{n,s} / |x-y|^{n+s}:
// alpha_{n,s} = 2^s Gamma((n+s)/2) / (pi^{n/2} |Gamma(-s/2)|).
double alpha_ns(int n, double s);

// Extension normalization beta_s = Gamma(1-s/2) / (2^{s-1} Gamma(s/2)).
double beta_s(double s);

// Subordination prefactor (s/2) / Gamma(1-s/2)  (equals 1/|Gamma(-s/2)|).
double subordination_prefactor(double s);

// Integral of (1+|u|^2)^{-(n+s)/2} over R^{n-1}; reduces an n-dim stripe
// kernel to the 1-dim one: pi^{(n-1)/2} Gamma((1+s)/2) / Gamma((n+s)/2).
double transverse_factor(int n, double s);

// Upper incomplete gamma function Gamma(a, x), a in (-1, 3], x > 0.
double upper_gamma(double a, double x);

// Uniform trapezoid rule for integral of g over [lo, hi] with npts nodes.
double trapezoid(const std::function<double(double)>& g, double lo, double hi, int npts);

// Lattice quadrature defect of the free kernel's second moment: the
// compensated limit
//   A_n(s) = (alpha_{n,s}/n) * lim_R [ int_{[-R,R]^n} |z|^{2-n-s} dz
//                                      - sum_{j in Z^n, 0<|j|}, cube }|j|^{2-n-s} ].
// In grid units the energy quadrature misses A_n(s) h^{2-s} |grad u(x)|^2
// per point; the seminorm and operator assemblies add it back.
double lattice_defect_energy(int n, double s);

// Interface counterpart for +-1 indicator fields in one dimension: the
// exact cell-pair integrals of |x-y|^{-1-s} across a straight cut exceed
// their midpoint values by alpha_{1,s} c1(s) h^{1-s} per interface.
double interface_defect_1d(double s);

} // namespace fractorus
