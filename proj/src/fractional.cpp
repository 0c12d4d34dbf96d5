#include "fractorus/fractional.hpp"

#include "fractorus/kernel.hpp"
#include "fractorus/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <iostream>
#include <stdexcept>
#include <string>

namespace fractorus {

namespace {

void validate_s(double s) {
    if (!(s > 0.0) || !(s < 2.0))
        throw std::invalid_argument("fractional: s must lie in (0, 2)");
}

bool cubic_cells(const Grid& g) {
    const double h0 = g.h(0);
    for (int i = 1; i < g.dim(); ++i)
        if (std::abs(g.h(i) - h0) > 1e-12 * h0) return false;
    return true;
}

// Flat index lies in the top quarter of the frequency range on some axis.
bool top_quartile_mode(const Grid& g, std::size_t idx) {
    const std::array<int, 3> m = g.unflatten(idx);
    for (int i = 0; i < g.dim(); ++i) {
        const int f = std::abs(g.freq(m[i], i));
        if (4 * f >= 3 * (g.npts(i) / 2)) return true;
    }
    return false;
}

// v(d) = (sqrt(vol)/N) sum_x u_x u_{x+d}; the circular autocorrelation in
// the library's transform normalization.
GridField autocorrelation(const GridField& u) {
    SpectralField su = to_spectral(u);
    for (auto& c : su.c) c = std::complex<double>(std::norm(c), 0.0);
    return to_physical(su);
}

GridField spectral_laplacian(const GridField& u) {
    SpectralField su = to_spectral(u);
    for (std::size_t i = 0; i < su.size(); ++i) su.c[i] *= -su.grid.lambda(i);
    return to_physical(su);
}

double seminorm_spectral(const GridField& u, double s) {
    const SpectralField su = to_spectral(u);
    double acc = 0.0;
    for (std::size_t i = 0; i < su.size(); ++i)
        acc += std::pow(su.grid.lambda(i), 0.5 * s) * std::norm(su.c[i]);
    return acc;
}

double seminorm_double_integral(const GridField& u, double s) {
    const Grid& g = u.grid;
    const std::vector<double> table = kernel_table(g, s);
    const GridField v = autocorrelation(u);
    double acc = 0.0;
    for (std::size_t d = 1; d < g.size(); ++d) acc += table[d] * (v[0] - v[d]);
    const double w = g.weight();
    const double n_over_sqrtvol =
        static_cast<double>(g.size()) / std::sqrt(g.torus().volume());
    double total = 2.0 * w * w * n_over_sqrtvol * acc;
    if (cubic_cells(g)) {
        const double h = g.h(0);
        total += lattice_defect_energy(g.dim(), s) * std::pow(h, 2.0 - s) *
                 integral(gradient_sq(u));
    }
    return std::max(total, 0.0);
}

} // namespace

GridField frac_laplacian_spectral(const GridField& u, double s) {
    validate_s(s);
    SpectralField su = to_spectral(u);
    double tail = 0.0, total = 0.0;
    for (std::size_t i = 0; i < su.size(); ++i) {
        const double e = std::pow(su.grid.lambda(i), 0.5 * s) * std::norm(su.c[i]);
        total += e;
        if (top_quartile_mode(su.grid, i)) tail += e;
    }
    if (total > 0.0 && tail > 0.01 * total) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "frac_laplacian_spectral: top-quartile modes carry %.1f%% of the "
                      "H^{s/2} energy; the field is under-resolved on this grid\n",
                      100.0 * tail / total);
        std::cerr << buf;
    }
    for (std::size_t i = 0; i < su.size(); ++i)
        su.c[i] *= std::pow(su.grid.lambda(i), 0.5 * s);
    return to_physical(su);
}

GridField frac_laplacian_integral(const GridField& u, double s,
                                  const IntegralOpParams& params) {
    validate_s(s);
    const Grid& g = u.grid;
    const std::vector<double> table = kernel_table(g, s);

    double ksum = 0.0;
    for (double k : table) ksum += k;

    GridField kf(g);
    kf.v = table;
    const SpectralField sk = to_spectral(kf);
    SpectralField su = to_spectral(u);
    const double fac = static_cast<double>(g.size()) / std::sqrt(g.torus().volume());
    for (std::size_t i = 0; i < su.size(); ++i) su.c[i] *= fac * sk.c[i];
    const GridField conv = to_physical(su);

    const double w = g.weight();
    GridField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = w * (u[i] * ksum - conv[i]);

    if (params.singular_correction && cubic_cells(g)) {
        const double h = g.h(0);
        const double c = 0.5 * lattice_defect_energy(g.dim(), s) * std::pow(h, 2.0 - s);
        const GridField lap = spectral_laplacian(u);
        for (std::size_t i = 0; i < g.size(); ++i) out[i] -= c * lap[i];
    }
    return out;
}

double seminorm(const GridField& u, double s, SeminormMethod method,
                const ExtensionParams& ext_params) {
    validate_s(s);
    switch (method) {
    case SeminormMethod::spectral:
        return seminorm_spectral(u, s);
    case SeminormMethod::double_integral:
        return seminorm_double_integral(u, s);
    case SeminormMethod::extension:
        return extension_energy(cs_extend(u, s, ext_params));
    }
    throw std::logic_error("seminorm: unknown method");
}

SeminormBreakdown seminorm_all(const GridField& u, double s,
                               const ExtensionParams& ext_params) {
    validate_s(s);
    SeminormBreakdown b;
    b.spectral = seminorm_spectral(u, s);
    b.double_integral = seminorm_double_integral(u, s);
    b.extension = extension_energy(cs_extend(u, s, ext_params));
    b.ratio_double_spectral = b.spectral > 0.0 ? b.double_integral / b.spectral : 0.0;
    b.ratio_extension_double =
        b.double_integral > 0.0 ? b.extension / b.double_integral : 0.0;
    return b;
}

std::string seminorm_json(const SeminormBreakdown& b) {
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "{\"spectral\": %.17g, \"double_integral\": %.17g, "
                  "\"extension\": %.17g, \"ratios\": {\"double_over_spectral\": %.17g, "
                  "\"extension_over_double\": %.17g}}",
                  b.spectral, b.double_integral, b.extension, b.ratio_double_spectral,
                  b.ratio_extension_double);
    return std::string(buf);
}

} // namespace fractorus
