#include "fractorus/allen_cahn.hpp"

#include "fractorus/kernel.hpp"
#include "pair_sums.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fractorus {

namespace {

void validate_params(const ACParams& p) {
    if (!(p.s > 0.0) || !(p.s < 1.0))
        throw std::invalid_argument("allen_cahn: s must lie in (0, 1)");
    if (!(p.epsilon > 0.0))
        throw std::invalid_argument("allen_cahn: epsilon must be positive");
    if (!(p.flow_dt > 0.0))
        throw std::invalid_argument("allen_cahn: flow_dt must be positive");
    if (!(p.tol_residual > 0.0))
        throw std::invalid_argument("allen_cahn: tol_residual must be positive");
    if (p.max_iters < 1)
        throw std::invalid_argument("allen_cahn: max_iters must be >= 1");
}

double well(double u) {
    const double q = 1.0 - u * u;
    return 0.25 * q * q;
}

double well_prime(double u) { return u * u * u - u; }

// clamp a copy into [-1, 1]; warn once per call if anything was out
GridField clamped(const GridField& u) {
    GridField c = u;
    bool out = false;
    for (double& x : c.v) {
        if (x > 1.0) {
            x = 1.0;
            out = true;
        } else if (x < -1.0) {
            x = -1.0;
            out = true;
        }
    }
    if (out)
        std::fprintf(stderr, "energy: values beyond [-1, 1] clamped\n");
    return c;
}

bool exactly_pm1(const GridField& u) {
    for (double x : u.v)
        if (x != 1.0 && x != -1.0) return false;
    return true;
}

// half the spectral seminorm, the smooth-branch Sobolev energy
double sobolev_spectral(const GridField& u, double s) {
    SpectralField su = to_spectral(u);
    double acc = 0.0;
    for (std::size_t i = 0; i < su.size(); ++i)
        acc += std::pow(su.grid.lambda(i), 0.5 * s) * std::norm(su.c[i]);
    return 0.5 * acc;
}

double potential_energy(const GridField& u, const ACParams& p,
                        const GridField* mask) {
    const double w = u.grid.weight();
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (mask && (*mask)[i] <= 0.0) continue;
        acc += well(u[i]);
    }
    return std::pow(p.epsilon, -p.s) * w * acc;
}

EnergyBreakdown assemble(double sob, double pot) {
    EnergyBreakdown b;
    b.sobolev = sob;
    b.potential = pot;
    b.total = sob + pot;
    return b;
}

// flow acceptance energy: no clamp, so transient overshoot past +-1 is
// penalized by the quartic well instead of silently flattened
double raw_total(const GridField& u, const ACParams& p) {
    return sobolev_spectral(u, p.s) + potential_energy(u, p, nullptr);
}

GridField spectral_frac_laplacian(const GridField& u, double s) {
    SpectralField su = to_spectral(u);
    for (std::size_t i = 0; i < su.size(); ++i)
        su.c[i] *= std::pow(su.grid.lambda(i), 0.5 * s);
    return to_physical(su);
}

void project_region(GridField& f, const GridField& mask) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (mask[i] <= 0.0) f.v[i] = 0.0;
}

} // namespace

EnergyBreakdown energy(const GridField& u, const ACParams& params) {
    validate_params(params);
    const GridField c = clamped(u);
    double sob;
    if (exactly_pm1(c)) {
        const std::vector<double> table = kernel_table(c.grid, params.s);
        sob = detail::quarter_pair_sum(c, table) +
              detail::face_defect_scale(c.grid, params.s) *
                  detail::face_sum(c, [](std::size_t, std::size_t) { return 1.0; });
    } else {
        sob = sobolev_spectral(c, params.s);
    }
    return assemble(sob, potential_energy(c, params, nullptr));
}

EnergyBreakdown energy(const GridField& u, const ACParams& params,
                       const SetIndicator& omega) {
    validate_params(params);
    if (!detail::same_grid(u.grid, omega.field.grid))
        throw std::invalid_argument("energy: field and region on different grids");
    const GridField c = clamped(u);
    const GridField q = detail::region_mask(omega);
    GridField qc = q;
    for (double& x : qc.v) x = 1.0 - x;

    const std::vector<double> table = kernel_table(c.grid, params.s);
    double sob = detail::quarter_pair_sum(c, table) -
                 detail::quarter_masked_sum(c, qc, table);
    sob = std::max(sob, 0.0);
    if (exactly_pm1(c))
        sob += detail::face_defect_scale(c.grid, params.s) *
               detail::face_sum(c, [&](std::size_t i, std::size_t j) {
                   return (q[i] > 0.0 || q[j] > 0.0) ? 1.0 : 0.0;
               });
    return assemble(sob, potential_energy(c, params, &q));
}

GridField residual(const GridField& u, const ACParams& params) {
    validate_params(params);
    GridField r = spectral_frac_laplacian(u, params.s);
    const double pref = std::pow(params.epsilon, -params.s);
    for (std::size_t i = 0; i < u.size(); ++i) r.v[i] += pref * well_prime(u[i]);
    return r;
}

ACSolution gradient_flow(const GridField& u0, const ACParams& params) {
    validate_params(params);
    const Grid& g = u0.grid;
    if (params.epsilon < 2.0 * g.max_h())
        std::fprintf(stderr,
                     "gradient_flow: epsilon below two cells, interfaces "
                     "unresolved on this grid\n");

    ACSolution sol;
    sol.params = params;
    sol.u = clamped(u0);

    std::vector<double> mult(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        mult[i] = std::pow(g.lambda(i), 0.5 * params.s);
    const double pref = std::pow(params.epsilon, -params.s);

    double e_cur = raw_total(sol.u, params);
    double dt = params.flow_dt;
    double rn = norm_sup(residual(sol.u, params));
    sol.energy_trace.push_back(e_cur);
    int it = 0;
    while (rn > params.tol_residual && it < params.max_iters) {
        ++it;
        GridField wp(g);
        for (std::size_t i = 0; i < g.size(); ++i)
            wp.v[i] = well_prime(sol.u[i]);
        SpectralField su = to_spectral(sol.u);
        const SpectralField sw = to_spectral(wp);
        for (std::size_t i = 0; i < g.size(); ++i)
            su.c[i] = (su.c[i] - dt * pref * sw.c[i]) / (1.0 + dt * mult[i]);
        GridField next = to_physical(su);
        const double e_next = raw_total(next, params);
        if (e_next <= e_cur + 1e-14 * std::max(1.0, std::abs(e_cur))) {
            sol.u = std::move(next);
            e_cur = e_next;
            rn = norm_sup(residual(sol.u, params));
            sol.energy_trace.push_back(e_cur);
        } else {
            dt *= 0.5;
            if (dt < 1e-13 * params.flow_dt) break; // stalled
        }
    }

    sol.iterations = it;
    sol.residual_norm = rn;
    sol.energy = energy(sol.u, params);
    sol.converged =
        rn <= params.tol_residual && norm_sup(sol.u) < 1.0;
    return sol;
}

GridField second_variation_apply(const GridField& u, const GridField& xi,
                                 const ACParams& params) {
    validate_params(params);
    if (!detail::same_grid(u.grid, xi.grid))
        throw std::invalid_argument(
            "second_variation_apply: field and direction on different grids");
    GridField out = spectral_frac_laplacian(xi, params.s);
    const double pref = std::pow(params.epsilon, -params.s);
    for (std::size_t i = 0; i < u.size(); ++i)
        out.v[i] += pref * (3.0 * u[i] * u[i] - 1.0) * xi[i];
    return out;
}

GridField second_variation_apply(const GridField& u, const GridField& xi,
                                 const ACParams& params,
                                 const SetIndicator& omega) {
    if (!detail::same_grid(u.grid, omega.field.grid))
        throw std::invalid_argument(
            "second_variation_apply: field and region on different grids");
    const GridField q = detail::region_mask(omega);
    GridField in = xi;
    project_region(in, q);
    GridField out = second_variation_apply(u, in, params);
    project_region(out, q);
    return out;
}

namespace {

int morse_index_on(const GridField& u, const ACParams& params,
                   const std::vector<std::size_t>& support, int k_max) {
    if (k_max < 1)
        throw std::invalid_argument("morse_index: k_max must be >= 1");
    const std::size_t dim = support.size();
    if (dim == 0)
        throw std::invalid_argument("morse_index: empty region");
    if (dim > 4096)
        throw std::invalid_argument(
            "morse_index: subspace beyond 4096 points, too large for the "
            "dense eigensolve");

    Eigen::MatrixXd A(dim, dim);
    GridField basis(u.grid, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
        basis.v[support[j]] = 1.0;
        const GridField col = second_variation_apply(u, basis, params);
        for (std::size_t i = 0; i < dim; ++i) A(i, j) = col[support[i]];
        basis.v[support[j]] = 0.0;
    }
    A = 0.5 * (A + A.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A,
                                                      Eigen::EigenvaluesOnly);
    const double tol_eig = 1e-8 * std::pow(params.epsilon, -params.s);
    int count = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i] < -tol_eig) ++count;
    if (count > k_max)
        std::fprintf(stderr,
                     "morse_index: k_max = %d reached with further negative "
                     "directions, the result is a lower bound\n",
                     k_max);
    return std::min(count, k_max);
}

} // namespace

int morse_index(const GridField& u, const ACParams& params, int k_max) {
    validate_params(params);
    std::vector<std::size_t> all(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) all[i] = i;
    return morse_index_on(u, params, all, k_max);
}

int morse_index(const GridField& u, const ACParams& params,
                const SetIndicator& omega, int k_max) {
    validate_params(params);
    if (!detail::same_grid(u.grid, omega.field.grid))
        throw std::invalid_argument("morse_index: field and region on different grids");
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (omega.field.v[i] > 0.0) support.push_back(i);
    return morse_index_on(u, params, support, k_max);
}

GridField layer_1d(double s, double domain_half_length, int npts) {
    if (!(s > 0.0) || !(s < 1.0))
        throw std::invalid_argument("layer_1d: s must lie in (0, 1)");
    if (2.0 * domain_half_length < 20.0)
        throw std::invalid_argument(
            "layer_1d: the domain must be at least 20 units long at the "
            "eps = 1 scaling");
    if (npts < 256)
        throw std::invalid_argument("layer_1d: need at least 256 points");

    const double L = 2.0 * domain_half_length;
    FlatTorus torus(1, {L, 0.0, 0.0});
    GridSpec spec;
    spec.npts = {npts, 0, 0};
    Grid g(torus, spec);

    // odd initial data with the rising zero on the grid point x = 0; the
    // flow preserves the symmetry, so the interfaces cannot drift
    GridField u0(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        u0.v[i] = std::sin(2.0 * M_PI * g.point(i)[0] / L);

    ACParams p;
    p.s = s;
    p.epsilon = 1.0;
    p.flow_dt = 0.5;
    p.tol_residual = 1e-7;
    p.max_iters = 60000;
    ACSolution sol = gradient_flow(u0, p);
    if (!sol.converged)
        throw std::runtime_error("layer_1d: the flow did not converge");

    // The odd subspace is flow-invariant, so the rising crossing stays
    // pinned at x = 0; antisymmetrize to strip roundoff drift (this makes
    // v(0) = 0 exact), then let the flow certify the residual again.
    const std::size_t n = g.size();
    GridField odd(g);
    for (std::size_t i = 0; i < n; ++i)
        odd.v[i] = 0.5 * (sol.u[i] - sol.u[(n - i) % n]);
    ACSolution redone = gradient_flow(odd, p);
    if (!redone.converged)
        throw std::runtime_error("layer_1d: the flow did not converge");
    return redone.u;
}

double bv_probe(const GridField& u, const Pt& center, double R) {
    if (!(R > 0.0)) throw std::invalid_argument("bv_probe: R must be positive");
    const Grid& g = u.grid;
    const GridField g2 = gradient_sq(u);
    const std::vector<std::uint8_t> mask = g.ball_mask(center, 0.5 * R);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (mask[i]) acc += std::sqrt(std::max(g2[i], 0.0));
    return acc * g.weight();
}

DensityReport density_probe(const GridField& u, const Pt& center, double R) {
    if (!(R > 0.0))
        throw std::invalid_argument("density_probe: R must be positive");
    const Grid& g = u.grid;
    const std::vector<std::uint8_t> outer = g.ball_mask(center, R);
    const std::vector<std::uint8_t> inner = g.ball_mask(center, 0.5 * R);
    DensityReport rep;
    double plus = 0.0, minus = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (outer[i]) {
            plus += std::abs(1.0 - u[i]);
            minus += std::abs(1.0 + u[i]);
        }
        if (inner[i]) {
            if (u[i] >= -0.9) rep.plus_meets = true;
            if (u[i] <= 0.9) rep.minus_meets = true;
        }
    }
    const double scale = g.weight() * std::pow(R, -double(g.dim()));
    rep.deficit_plus = plus * scale;
    rep.deficit_minus = minus * scale;
    return rep;
}

double potential_decay_probe(const std::vector<ACSolution>& family) {
    if (family.size() < 2)
        throw std::invalid_argument(
            "potential_decay_probe: need at least two solutions");
    const double s0 = family[0].params.s;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const ACSolution& sol : family) {
        if (std::abs(sol.params.s - s0) > 1e-12)
            throw std::invalid_argument(
                "potential_decay_probe: the family must share one s");
        if (!(sol.energy.potential > 0.0))
            throw std::invalid_argument(
                "potential_decay_probe: nonpositive potential energy");
        const double x = std::log(sol.params.epsilon);
        const double y = std::log(sol.energy.potential);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(family.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

StabilityRegionReport almost_stability_probe(
    const GridField& u, const ACParams& params,
    const std::vector<SetIndicator>& regions) {
    validate_params(params);
    if (regions.empty())
        throw std::invalid_argument("almost_stability_probe: no regions");
    const Grid& g = u.grid;
    std::vector<std::vector<std::size_t>> pts(regions.size());
    for (std::size_t r = 0; r < regions.size(); ++r) {
        if (!detail::same_grid(g, regions[r].field.grid))
            throw std::invalid_argument(
                "almost_stability_probe: region grid mismatch");
        for (std::size_t i = 0; i < g.size(); ++i)
            if (regions[r].field.v[i] > 0.0) pts[r].push_back(i);
        if (pts[r].empty())
            throw std::invalid_argument("almost_stability_probe: empty region");
    }
    for (std::size_t a = 0; a < regions.size(); ++a)
        for (std::size_t b = a + 1; b < regions.size(); ++b) {
            std::size_t ia = 0, ib = 0;
            while (ia < pts[a].size() && ib < pts[b].size()) {
                if (pts[a][ia] == pts[b][ib])
                    throw std::invalid_argument(
                        "almost_stability_probe: regions overlap");
                if (pts[a][ia] < pts[b][ib])
                    ++ia;
                else
                    ++ib;
            }
        }

    // Lambda = m * max over cross-region pairs of the kernel
    const std::vector<double> table = kernel_table(g, params.s);
    double kmax = 0.0;
    for (std::size_t a = 0; a < regions.size(); ++a)
        for (std::size_t b = a + 1; b < regions.size(); ++b)
            for (std::size_t i : pts[a])
                for (std::size_t j : pts[b]) {
                    std::array<int, 3> d = g.unflatten(j);
                    const std::array<int, 3> mi = g.unflatten(i);
                    for (int ax = 0; ax < g.dim(); ++ax)
                        d[ax] = (d[ax] - mi[ax] + g.npts(ax)) % g.npts(ax);
                    kmax = std::max(kmax, table[g.flatten(d)]);
                }
    const double lambda =
        static_cast<double>(regions.size() - 1) * kmax;

    StabilityRegionReport rep;
    rep.lambda = lambda;
    rep.margins.assign(regions.size(),
                       std::numeric_limits<double>::infinity());
    const double w = g.weight();
    for (std::size_t r = 0; r < regions.size(); ++r) {
        // depth of every region point: distance to the nearest outside point
        std::vector<double> depth(pts[r].size(),
                                  std::numeric_limits<double>::infinity());
        for (std::size_t pi = 0; pi < pts[r].size(); ++pi) {
            const Pt p = g.point(pts[r][pi]);
            for (std::size_t j = 0; j < g.size(); ++j) {
                if (regions[r].field.v[j] > 0.0) continue;
                depth[pi] = std::min(
                    depth[pi], g.torus().geodesic_distance(p, g.point(j)));
            }
        }
        const double dmax = *std::max_element(depth.begin(), depth.end());

        for (double frac : {1.0, 0.5, 0.25}) {
            const double width = dmax * frac;
            if (width < 2.0 * g.max_h()) continue;
            // centers: every qualifying point, strided down to at most 5
            std::vector<std::size_t> centers;
            for (std::size_t pi = 0; pi < pts[r].size(); ++pi)
                if (depth[pi] >= width) centers.push_back(pts[r][pi]);
            const std::size_t stride = std::max<std::size_t>(1, centers.size() / 5);
            for (std::size_t ci = 0; ci < centers.size(); ci += stride) {
                const Pt c = g.point(centers[ci]);
                GridField xi(g, 0.0);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double d = g.torus().geodesic_distance(g.point(i), c);
                    if (d < width) {
                        const double t = std::cos(0.5 * M_PI * d / width);
                        xi.v[i] = t * t;
                    }
                }
                const GridField axi = second_variation_apply(u, xi, params);
                const double q = inner(axi, xi);
                double l1 = 0.0;
                for (double x : xi.v) l1 += std::abs(x);
                l1 *= w;
                rep.margins[r] = std::min(rep.margins[r], q + lambda * l1 * l1);
            }
        }
        if (!std::isfinite(rep.margins[r]))
            throw std::invalid_argument(
                "almost_stability_probe: region too thin for any bump");
    }

    for (std::size_t r = 0; r < regions.size(); ++r) {
        if (rep.margins[r] >= -1e-10 * (1.0 + std::abs(rep.margins[r]))) {
            rep.region = static_cast<int>(r);
            rep.margin = rep.margins[r];
            rep.passed = true;
            break;
        }
    }
    return rep;
}

} // namespace fractorus
