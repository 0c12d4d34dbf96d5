#include "fractorus/extension.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fractorus/special.hpp"

namespace fractorus {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void validate_s(double s) {
    if (!(s > 0.0 && s < 2.0)) throw std::invalid_argument("extension: s must lie in (0, 2)");
}

double min_h(const Grid& g) {
    double m = g.h(0);
    for (int i = 1; i < g.dim(); ++i) m = std::min(m, g.h(i));
    return m;
}

// Slowest nonconstant mode of the torus.
double lambda_one(const Grid& g) {
    double lam = std::numeric_limits<double>::max();
    for (int i = 0; i < g.dim(); ++i) {
        const double v = kTwoPi / g.torus().side(i);
        lam = std::min(lam, v * v);
    }
    return lam;
}

// Largest eigenvalue representable on the grid (all axes at Nyquist).
double lambda_max(const Grid& g) {
    double acc = 0.0;
    for (int i = 0; i < g.dim(); ++i) {
        const double v = kTwoPi * (g.npts(i) / 2) / g.torus().side(i);
        acc += v * v;
    }
    return acc;
}

// Least-squares coefficients of the exact small-z expansion
// U(x, z) = u(x) + a(x) z^s + b(x) z^2 over the lowest fit_nodes ladder
// nodes, fitted in the scaled variable zeta = z / z_top for conditioning.
// The basis degenerates as s -> 2, where the two exponents merge.
struct SmallZFit {
    GridField a, b;
    double resid_rel = 0.0;
};

SmallZFit small_z_fit(const ExtensionField& ext) {
    const int m = ext.params.fit_nodes;
    if (m < 2 || static_cast<int>(ext.z_nodes.size()) < m)
        throw std::invalid_argument("extension: ladder shorter than the small-z fit window");
    const double s = ext.s;
    const double zm = ext.z_nodes[m - 1];
    std::vector<double> b1(m), b2(m);
    double s11 = 0.0, s12 = 0.0, s22 = 0.0;
    for (int j = 0; j < m; ++j) {
        const double zeta = ext.z_nodes[j] / zm;
        b1[j] = std::pow(zeta, s);
        b2[j] = zeta * zeta;
        s11 += b1[j] * b1[j];
        s12 += b1[j] * b2[j];
        s22 += b2[j] * b2[j];
    }
    const double det = s11 * s22 - s12 * s12;
    if (!(det > 1e-10 * s11 * s22))
        throw std::runtime_error("extension: small-z fit basis degenerate for this s and ladder");

    SmallZFit out;
    out.a = GridField(ext.grid);
    out.b = GridField(ext.grid);
    const double inv_zs = std::pow(zm, -s), inv_z2 = 1.0 / (zm * zm);
    double num = 0.0, den = 0.0;
    for (std::size_t x = 0; x < ext.grid.size(); ++x) {
        double r1 = 0.0, r2 = 0.0;
        for (int j = 0; j < m; ++j) {
            const double d = ext.slices[j][x] - ext.trace[x];
            r1 += b1[j] * d;
            r2 += b2[j] * d;
            den += d * d;
        }
        const double az = (s22 * r1 - s12 * r2) / det;
        const double bz = (s11 * r2 - s12 * r1) / det;
        for (int j = 0; j < m; ++j) {
            const double d = ext.slices[j][x] - ext.trace[x];
            const double e = d - az * b1[j] - bz * b2[j];
            num += e * e;
        }
        out.a[x] = az * inv_zs;
        out.b[x] = bz * inv_z2;
    }
    out.resid_rel = den > 0.0 ? std::sqrt(num / den) : 0.0;
    return out;
}

// Per-node energy densities z^{1-s}(|grad_x U|^2 + (dU/dz)^2) with node
// quadrature weights for the z-integral, plus the analytic boundary-layer
// density on [0, z_0]. Everything is a convex quadratic functional of the
// slice data (vertical derivatives by second-order differences, the
// boundary layer through the linear small-z fit), so the discrete energy
// inherits the minimality of the continuum one: perturbing any interior
// slice away from the extension raises it.
struct EnergyTables {
    std::vector<GridField> node_density;
    std::vector<double> node_weight;
    GridField layer0;
    double zc0 = 0.0;
};

// Node weights for int_{z_0}^{z_top} f dz on a ladder: composite Simpson in
// tau = log z when the ladder is geometric (fourth order in log rho), else
// a per-segment two-point rule exact on z^s and z^2.
std::vector<double> z_rule_weights(const std::vector<double>& zs, double s) {
    const int nz = static_cast<int>(zs.size());
    std::vector<double> w(nz, 0.0);
    bool geometric = nz >= 5;
    if (geometric) {
        const double dtau0 = std::log(zs[1] / zs[0]);
        for (int j = 0; j + 1 < nz; ++j)
            if (std::abs(std::log(zs[j + 1] / zs[j]) - dtau0) > 1e-9) geometric = false;
    }
    if (geometric) {
        const double dtau = std::log(zs[1] / zs[0]);
        int j = 0;
        for (; j + 2 < nz; j += 2) {
            w[j] += dtau / 3.0 * zs[j];
            w[j + 1] += 4.0 * dtau / 3.0 * zs[j + 1];
            w[j + 2] += dtau / 3.0 * zs[j + 2];
        }
        if (j + 1 < nz) { // odd trailing segment, already deep in the decayed tail
            w[j] += 0.5 * dtau * zs[j];
            w[j + 1] += 0.5 * dtau * zs[j + 1];
        }
    } else {
        for (int j = 0; j + 1 < nz; ++j) {
            const double a = zs[j], b = zs[j + 1];
            const double f1a = std::pow(a, s), f1b = std::pow(b, s);
            const double m1 = (std::pow(b, 1.0 + s) - std::pow(a, 1.0 + s)) / (1.0 + s);
            const double m2 = (b * b * b - a * a * a) / 3.0;
            const double det = f1a * b * b - f1b * a * a;
            w[j] += (m1 * b * b - m2 * f1b) / det;
            w[j + 1] += (f1a * m2 - a * a * m1) / det;
        }
    }
    return w;
}

EnergyTables build_energy_tables(const ExtensionField& ext) {
    const auto& zs = ext.z_nodes;
    const int nz = static_cast<int>(zs.size());
    if (nz < std::max(ext.params.fit_nodes, 3))
        throw std::invalid_argument("extension_energy: ladder too short");
    const double s = ext.s;
    const std::size_t n = ext.grid.size();
    const SmallZFit fit = small_z_fit(ext);

    EnergyTables tab;
    tab.node_density.reserve(nz);
    for (int j = 0; j < nz; ++j) {
        GridField dz(ext.grid);
        if (j == 0) {
            // the fitted boundary ansatz carries the z^s singularity exactly
            const double da = s * std::pow(zs[0], s - 1.0);
            const double db = 2.0 * zs[0];
            for (std::size_t x = 0; x < n; ++x) dz[x] = da * fit.a[x] + db * fit.b[x];
        } else if (j + 1 < nz) {
            const double hl = zs[j] - zs[j - 1], hr = zs[j + 1] - zs[j];
            const double cl = -hr / (hl * (hl + hr));
            const double cc = (hr - hl) / (hl * hr);
            const double cr = hl / (hr * (hl + hr));
            for (std::size_t x = 0; x < n; ++x)
                dz[x] = cl * ext.slices[j - 1][x] + cc * ext.slices[j][x] +
                        cr * ext.slices[j + 1][x];
        } else {
            const double hl = zs[j] - zs[j - 1];
            for (std::size_t x = 0; x < n; ++x)
                dz[x] = (ext.slices[j][x] - ext.slices[j - 1][x]) / hl;
        }
        const GridField gx = gradient_sq(ext.slices[j]);
        GridField dens(ext.grid);
        const double wz = std::pow(zs[j], 1.0 - s);
        for (std::size_t x = 0; x < n; ++x) dens[x] = wz * (gx[x] + dz[x] * dz[x]);
        tab.node_density.push_back(std::move(dens));
    }

    tab.node_weight = z_rule_weights(zs, s);

    // [0, z_0]: int z^{1-s} |grad(u + a z^s + b z^2)|^2 dz in closed form
    GridField layer0(ext.grid);
    const double z0 = zs[0];
    const double cv1 = s * std::pow(z0, s);
    const double cv2 = 2.0 * s * z0 * z0;
    const double cv3 = 4.0 * std::pow(z0, 4.0 - s) / (4.0 - s);
    for (std::size_t x = 0; x < n; ++x)
        layer0[x] = cv1 * fit.a[x] * fit.a[x] + cv2 * fit.a[x] * fit.b[x] +
                    cv3 * fit.b[x] * fit.b[x];
    const double cuu = std::pow(z0, 2.0 - s) / (2.0 - s);
    const double cua = z0 * z0;
    const double caa = std::pow(z0, 2.0 + s) / (2.0 + s);
    const double cub = 2.0 * std::pow(z0, 4.0 - s) / (4.0 - s);
    const double cab = 0.5 * std::pow(z0, 4.0);
    const double cbb = std::pow(z0, 6.0 - s) / (6.0 - s);
    for (int ax = 0; ax < ext.grid.dim(); ++ax) {
        const GridField gu = gradient_axis(ext.trace, ax);
        const GridField ga = gradient_axis(fit.a, ax);
        const GridField gb = gradient_axis(fit.b, ax);
        for (std::size_t x = 0; x < n; ++x)
            layer0[x] += cuu * gu[x] * gu[x] + cua * gu[x] * ga[x] + caa * ga[x] * ga[x] +
                         cub * gu[x] * gb[x] + cab * ga[x] * gb[x] + cbb * gb[x] * gb[x];
    }
    tab.layer0 = std::move(layer0);
    tab.zc0 = 0.5 * zs[0];
    return tab;
}

double raw_energy_global(const EnergyTables& tab) {
    double acc = integral(tab.layer0);
    for (std::size_t j = 0; j < tab.node_density.size(); ++j)
        acc += tab.node_weight[j] * integral(tab.node_density[j]);
    return acc;
}

double raw_energy_ball(const Grid& g, const EnergyTables& tab, const std::vector<double>& zs,
                       const Pt& center, double R) {
    const double w = g.weight();
    double acc = 0.0;
    if (tab.zc0 < R) {
        const auto mask = g.ball_mask(center, std::sqrt(R * R - tab.zc0 * tab.zc0));
        double s0 = 0.0;
        for (std::size_t x = 0; x < g.size(); ++x)
            if (mask[x]) s0 += tab.layer0[x];
        acc += s0 * w;
    }
    for (std::size_t j = 0; j < tab.node_density.size(); ++j) {
        if (zs[j] >= R) break; // nodes increase
        const auto mask = g.ball_mask(center, std::sqrt(R * R - zs[j] * zs[j]));
        double sj = 0.0;
        for (std::size_t x = 0; x < g.size(); ++x)
            if (mask[x]) sj += tab.node_density[j][x];
        acc += tab.node_weight[j] * sj * w;
    }
    return acc;
}

} // namespace

double g_profile(double lambda, double z, double s, const ExtensionParams& p) {
    validate_s(s);
    if (lambda < 0.0 || z < 0.0)
        throw std::invalid_argument("g_profile: lambda and z must be nonnegative");
    if (lambda == 0.0 || z == 0.0) return 1.0;
    const double w = std::sqrt(lambda) * z;
    if (w >= 50.0) return 0.0; // g ~ e^{-w}, below 2e-22

    // integrand exp(-lambda e^tau - (z^2/4) e^{-tau} - (s/2) tau) peaks at
    // tau* = log(z / (2 sqrt(lambda))); both tails die doubly exponentially
    const double tau_star = std::log(0.5 * z / std::sqrt(lambda));
    const double reach = std::acosh(1.0 + 60.0 / w) + 3.0;
    const double lo = tau_star - reach, hi = tau_star + reach;
    int npts = std::max(81, static_cast<int>((hi - lo) * p.quad_pts_per_unit));
    npts |= 1;
    const double step = (hi - lo) / (npts - 1);
    std::vector<double> ex(npts);
    double emax = -1e300;
    for (int i = 0; i < npts; ++i) {
        const double tau = lo + i * step;
        const double t = std::exp(tau);
        ex[i] = -lambda * t - 0.25 * z * z / t - 0.5 * s * tau;
        emax = std::max(emax, ex[i]);
    }
    double acc = 0.0;
    for (int i = 0; i < npts; ++i) {
        const double v = std::exp(ex[i] - emax);
        acc += (i == 0 || i == npts - 1) ? 0.5 * v : v;
    }
    return std::exp(emax + std::log(acc * step) + s * std::log(0.5 * z) - std::lgamma(0.5 * s));
}

std::vector<double> z_ladder(const Grid& grid, double s, const ExtensionParams& p) {
    validate_s(s);
    if (!(p.rho > 1.0) || !(p.z_min_factor > 0.0) || !(p.top_tol > 0.0))
        throw std::invalid_argument("z_ladder: need rho > 1, z_min_factor > 0, top_tol > 0");
    const double lam1 = lambda_one(grid);
    std::vector<double> zs;
    double z = p.z_min_factor * min_h(grid);
    while (true) {
        zs.push_back(z);
        if (g_profile(lam1, z, s, p) < p.top_tol) break;
        if (zs.size() > 4096) throw std::runtime_error("z_ladder: decay tolerance not reached");
        z *= p.rho;
    }
    return zs;
}

ExtensionField cs_extend(const GridField& u, double s, const std::vector<double>& z_nodes,
                         const ExtensionParams& p) {
    validate_s(s);
    if (z_nodes.empty()) throw std::invalid_argument("cs_extend: empty z ladder");
    for (std::size_t j = 0; j < z_nodes.size(); ++j)
        if (!(z_nodes[j] > 0.0) || (j > 0 && !(z_nodes[j] > z_nodes[j - 1])))
            throw std::invalid_argument("cs_extend: z nodes must be positive and increasing");

    ExtensionField ext;
    ext.grid = u.grid;
    ext.s = s;
    ext.params = p;
    ext.trace = u;
    ext.z_nodes = z_nodes;
    ext.slices.reserve(z_nodes.size());
    const SpectralField su = to_spectral(u);
    for (double z : z_nodes) {
        SpectralField sz = su;
        std::map<double, double> cache; // many modes share an eigenvalue
        for (std::size_t i = 0; i < sz.size(); ++i) {
            const double lam = u.grid.lambda(i);
            double g = 1.0;
            if (lam != 0.0) {
                auto it = cache.find(lam);
                if (it == cache.end()) it = cache.emplace(lam, g_profile(lam, z, s, p)).first;
                g = it->second;
            }
            sz.c[i] *= g;
        }
        ext.slices.push_back(to_physical(sz));
    }
    return ext;
}

ExtensionField cs_extend(const GridField& u, double s, const ExtensionParams& p) {
    return cs_extend(u, s, z_ladder(u.grid, s, p), p);
}

GridField dtn(const ExtensionField& ext) {
    const int m = ext.params.fit_nodes;
    if (static_cast<int>(ext.z_nodes.size()) < m)
        throw std::invalid_argument("dtn: ladder shorter than the fit window");
    const double thr = 0.1 * kTwoPi / std::sqrt(lambda_max(ext.grid));
    if (!(ext.z_nodes[m - 1] < thr))
        throw std::invalid_argument("dtn: z-ladder too coarse near z = 0 for the fit window");
    const SmallZFit fit = small_z_fit(ext);
    if (fit.resid_rel > ext.params.fit_tol)
        throw std::runtime_error("dtn: small-z fit residual above tolerance; refine the ladder");
    GridField out(ext.grid);
    for (std::size_t x = 0; x < out.size(); ++x) out[x] = ext.s * fit.a[x];
    return out;
}

double extension_energy(const ExtensionField& ext) {
    return beta_s(ext.s) * raw_energy_global(build_energy_tables(ext));
}

double extension_energy(const ExtensionField& ext, const Pt& center, double R) {
    if (!(R > 0.0) || R > 0.5 * ext.grid.torus().min_side())
        throw std::invalid_argument("extension_energy: radius must lie in (0, min side/2]");
    const EnergyTables tab = build_energy_tables(ext);
    return beta_s(ext.s) * raw_energy_ball(ext.grid, tab, ext.z_nodes, center, R);
}

double harmonicity_residual(const ExtensionField& ext) {
    const auto& zs = ext.z_nodes;
    const int nz = static_cast<int>(zs.size());
    if (nz < 3) throw std::invalid_argument("harmonicity_residual: need at least 3 z nodes");
    const double s = ext.s;
    const std::size_t n = ext.grid.size();

    // spectral horizontal Laplacian per slice
    std::vector<GridField> lap(nz);
    for (int j = 0; j < nz; ++j) {
        SpectralField sf = to_spectral(ext.slices[j]);
        for (std::size_t i = 0; i < sf.size(); ++i) sf.c[i] *= -ext.grid.lambda(i);
        lap[j] = to_physical(sf);
    }

    double num = 0.0, den = 0.0;
    for (int j = 1; j + 1 < nz; ++j) {
        const double zl = 0.5 * (zs[j - 1] + zs[j]), zr = 0.5 * (zs[j] + zs[j + 1]);
        const double al = std::pow(zl, 1.0 - s), ar = std::pow(zr, 1.0 - s);
        const double hl = zs[j] - zs[j - 1], hr = zs[j + 1] - zs[j];
        const double dv = zr - zl;
        const double wj = std::pow(zs[j], 1.0 - s);
        for (std::size_t x = 0; x < n; ++x) {
            const double flux =
                (ar * (ext.slices[j + 1][x] - ext.slices[j][x]) / hr -
                 al * (ext.slices[j][x] - ext.slices[j - 1][x]) / hl) / dv;
            const double r = flux + wj * lap[j][x];
            num += r * r * dv;
            den += ext.slices[j][x] * ext.slices[j][x] * dv;
        }
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

std::vector<PhiRow> phi_functional(const GridField& u, double s, double epsilon,
                                   const Pt& center, const std::vector<double>& radii,
                                   const ExtensionParams& p) {
    validate_s(s);
    if (!(epsilon > 0.0)) throw std::invalid_argument("phi_functional: epsilon must be positive");
    const Grid& g = u.grid;
    const double rmax = 0.5 * g.torus().min_side();
    for (double R : radii)
        if (!(R > 0.0) || R > rmax)
            throw std::invalid_argument("phi_functional: radii must lie in (0, min side/2]");

    const ExtensionField ext = cs_extend(u, s, z_ladder(g, s, p), p);
    const EnergyTables tab = build_energy_tables(ext);
    const double gam = 1.0 / (2.0 * beta_s(s));
    const double es = std::pow(epsilon, -s);
    GridField wfield(g);
    for (std::size_t x = 0; x < g.size(); ++x) {
        const double q = 1.0 - u[x] * u[x];
        wfield[x] = es * 0.25 * q * q;
    }
    const double wq = g.weight();
    const int n = g.dim();

    // masked parts with disc radii from rmask, scale prefactor from rscale;
    // separating the two isolates the mask-placement sensitivity
    auto eval = [&](double rmask, double rscale) {
        const double sob = gam * raw_energy_ball(g, tab, ext.z_nodes, center, rmask);
        const auto mask = g.ball_mask(center, rmask);
        double pot = 0.0;
        for (std::size_t x = 0; x < g.size(); ++x)
            if (mask[x]) pot += wfield[x];
        pot *= wq;
        const double scale = std::pow(rscale, s - n);
        return std::array<double, 3>{scale * (sob + pot), scale * sob, scale * pot};
    };

    std::vector<PhiRow> rows;
    rows.reserve(radii.size());
    const double delta = 0.5 * g.max_h();
    for (double R : radii) {
        const auto base = eval(R, R);
        const auto up = eval(std::min(R + delta, rmax), R);
        const auto dn = eval(std::max(R - delta, 0.5 * delta), R);
        PhiRow row;
        row.radius = R;
        row.phi = base[0];
        row.sobolev_part = base[1];
        row.potential_part = base[2];
        row.quad_error = std::max(std::abs(up[0] - base[0]), std::abs(base[0] - dn[0]));
        rows.push_back(row);
    }
    return rows;
}

} // namespace fractorus
