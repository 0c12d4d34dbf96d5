#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fractorus/extension.hpp"
#include "fractorus/special.hpp"
#include "fractorus/torus.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace fractorus;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Closed form for the extension profile: g = 2^{1-nu}/Gamma(nu) w^nu K_nu(w)
// with nu = s/2 and w = sqrt(lambda) z. Entirely independent of the
// subordination quadrature the library uses.
double g_bessel(double lambda, double z, double s) {
    const double nu = 0.5 * s;
    const double w = std::sqrt(lambda) * z;
    return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(w, nu) *
           std::cyl_bessel_k(nu, w);
}

// g' in closed form via d/dw [w^nu K_nu(w)] = -w^nu K_{nu-1}(w).
double gp_bessel(double lambda, double z, double s) {
    const double nu = 0.5 * s;
    const double w = std::sqrt(lambda) * z;
    return -std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::sqrt(lambda) *
           std::pow(w, nu) * std::cyl_bessel_k(1.0 - nu, w);
}

// Fine trapezoid in tau = log z of int_0^ztop z^{1-s} (g'^2 + lambda g^2) dz.
// The integrand decays like e^{s tau} as tau -> -inf, so the lower limit
// scales with 1/s.
double dirichlet_integral_1d(double lambda, double s, double ztop) {
    const double tau0 = -28.0 / s, tau1 = std::log(ztop);
    const int nsteps = 120000;
    const double dt = (tau1 - tau0) / nsteps;
    double acc = 0.0;
    for (int i = 0; i <= nsteps; ++i) {
        const double z = std::exp(tau0 + i * dt);
        const double g = g_bessel(lambda, z, s), gp = gp_bessel(lambda, z, s);
        const double f = std::pow(z, 2.0 - s) * (gp * gp + lambda * g * g);
        acc += (i == 0 || i == nsteps) ? 0.5 * f : f;
    }
    return acc * dt;
}

GridField cosine_mode(const Grid& g, int k, double amp = 1.0) {
    GridField u(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        u[i] = amp * std::cos(2.0 * kPi * k * g.point(i)[0] / g.torus().side(0));
    return u;
}

double sup_diff(const GridField& a, const GridField& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.grid.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

} // namespace

TEST_CASE("extension profile matches the Bessel closed form") {
    // frozen reference value, computed from 2^{3/4}/Gamma(1/4) w^{1/4} K_{1/4}(w)
    CHECK(g_profile(4.0 * kPi * kPi, 0.1, 0.5) ==
          doctest::Approx(0.316423055695756).epsilon(1e-12));

    for (double s : {0.3, 0.5, 0.8, 1.0, 1.5})
        for (double lam : {1.0, 4.0 * kPi * kPi, 16.0 * kPi * kPi})
            for (double z : {0.01, 0.3, 1.2}) {
                const double gq = g_profile(lam, z, s);
                const double gb = g_bessel(lam, z, s);
                CAPTURE(s);
                CAPTURE(lam);
                CAPTURE(z);
                CHECK(gq == doctest::Approx(gb).epsilon(1e-10));
            }
}

TEST_CASE("extension profile boundary values and monotonicity") {
    CHECK(g_profile(0.0, 0.7, 0.5) == 1.0);
    CHECK(g_profile(39.478, 0.0, 0.5) == 1.0);
    // decreasing in z and in lambda
    CHECK(g_profile(4.0 * kPi * kPi, 0.2, 0.5) < g_profile(4.0 * kPi * kPi, 0.1, 0.5));
    CHECK(g_profile(16.0 * kPi * kPi, 0.1, 0.5) < g_profile(4.0 * kPi * kPi, 0.1, 0.5));
    // deep tail underflows to zero
    CHECK(g_profile(1.0e6, 10.0, 0.5) == 0.0);

    CHECK_THROWS_AS((void)g_profile(1.0, 0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)g_profile(1.0, 0.1, 2.0), std::invalid_argument);
    CHECK_THROWS_AS((void)g_profile(-1.0, 0.1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS((void)g_profile(1.0, -0.1, 0.5), std::invalid_argument);
}

TEST_CASE("z ladder geometry") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{64, 0, 0}});
    ExtensionParams p;
    const auto zs = z_ladder(g, 0.5, p);

    REQUIRE(zs.size() >= 10);
    CHECK(zs.front() == doctest::Approx(g.max_h() * p.z_min_factor).epsilon(1e-14));
    for (std::size_t j = 1; j < zs.size(); ++j)
        CHECK(zs[j] / zs[j - 1] == doctest::Approx(p.rho).epsilon(1e-12));
    // last node is past the decay cutoff for the lowest nonzero eigenvalue,
    // the one before is not
    const double lam1 = 4.0 * kPi * kPi;
    CHECK(g_profile(lam1, zs.back(), 0.5) < p.top_tol);
    CHECK(g_profile(lam1, zs[zs.size() - 2], 0.5) >= p.top_tol);

    ExtensionParams bad = p;
    bad.rho = 1.0 + 1e-9; // ladder would need far more than the node cap
    CHECK_THROWS_AS((void)z_ladder(g, 0.5, bad), std::runtime_error);
}

TEST_CASE("extending a constant gives the constant at every height") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{32, 0, 0}});
    GridField u(g);
    for (std::size_t i = 0; i < g.size(); ++i) u[i] = 0.75;
    const auto ext = cs_extend(u, 0.5);
    for (const auto& slice : ext.slices)
        for (std::size_t i = 0; i < g.size(); ++i)
            CHECK(slice[i] == doctest::Approx(0.75).epsilon(1e-13));
}

TEST_CASE("single-mode extension is the profile times the mode") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{64, 0, 0}});
    const GridField u = cosine_mode(g, 3);
    const double lam = 4.0 * kPi * kPi * 9.0;
    const auto ext = cs_extend(u, 0.5);
    for (std::size_t j = 0; j < ext.z_nodes.size(); ++j) {
        const double gz = g_bessel(lam, ext.z_nodes[j], 0.5);
        for (std::size_t i = 0; i < g.size(); ++i)
            CHECK(ext.slices[j][i] == doctest::Approx(gz * u[i]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("cs_extend validates its inputs") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{16, 0, 0}});
    const GridField u = cosine_mode(g, 1);
    CHECK_THROWS_AS((void)cs_extend(u, -0.5), std::invalid_argument);
    CHECK_THROWS_AS((void)cs_extend(u, 2.0), std::invalid_argument);
    CHECK_THROWS_AS((void)cs_extend(u, 0.5, std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS((void)cs_extend(u, 0.5, std::vector<double>{0.2, 0.1}),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)cs_extend(u, 0.5, std::vector<double>{-0.1, 0.2}),
                    std::invalid_argument);
}

TEST_CASE("Dirichlet-to-Neumann map on single modes") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{128, 0, 0}});
    for (double s : {0.3, 0.5, 0.8}) {
        for (int k : {1, 2}) {
            const GridField u = cosine_mode(g, k);
            const auto ext = cs_extend(u, s);
            const GridField q = dtn(ext);
            const double lam = 4.0 * kPi * kPi * k * k;
            const double target = -beta_s(s) * std::pow(lam, 0.5 * s);
            double worst = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i)
                worst = std::max(worst, std::abs(q[i] - target * u[i]));
            CAPTURE(s);
            CAPTURE(k);
            CHECK(worst / std::abs(target) < 1e-4);
        }
    }
}

TEST_CASE("Dirichlet-to-Neumann map is linear and kills constants") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{64, 0, 0}});
    GridField c(g);
    for (std::size_t i = 0; i < g.size(); ++i) c[i] = -1.3;
    CHECK(norm_sup(dtn(cs_extend(c, 0.5))) < 1e-12);

    const GridField u = cosine_mode(g, 1);
    const GridField v = cosine_mode(g, 2, 0.6);
    GridField w(g);
    for (std::size_t i = 0; i < g.size(); ++i) w[i] = u[i] + v[i];
    const GridField qu = dtn(cs_extend(u, 0.5));
    const GridField qv = dtn(cs_extend(v, 0.5));
    GridField qsum(g);
    for (std::size_t i = 0; i < g.size(); ++i) qsum[i] = qu[i] + qv[i];
    CHECK(sup_diff(dtn(cs_extend(w, 0.5)), qsum) < 1e-10);
}

TEST_CASE("Dirichlet-to-Neumann map requires enough nodes near the boundary") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{64, 0, 0}});
    const GridField u = cosine_mode(g, 1);
    // all nodes far above the highest-mode decay scale
    const auto ext = cs_extend(u, 0.5, std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});
    CHECK_THROWS_AS((void)dtn(ext), std::invalid_argument);
}

TEST_CASE("extension energy of a single mode") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{256, 0, 0}});
    for (double s : {0.3, 0.5, 0.8}) {
        const GridField u = cosine_mode(g, 1);
        const auto ext = cs_extend(u, s);
        const double e = extension_energy(ext);
        const double lam = 4.0 * kPi * kPi;

        // closed form: beta_s^2 lambda^{s/2} * (1/2 from the cosine's L2 mass)
        const double exact = beta_s(s) * beta_s(s) * std::pow(lam, 0.5 * s) * 0.5;
        CAPTURE(s);
        CHECK(e == doctest::Approx(exact).epsilon(5e-3));

        // independent quadrature of the profile's Dirichlet integral
        const double oracle = beta_s(s) * dirichlet_integral_1d(lam, s, 6.0) * 0.5;
        CHECK(e == doctest::Approx(oracle).epsilon(5e-3));
    }
    // a refined ladder converges at second order in log rho
    {
        const double s = 0.5;
        ExtensionParams fine;
        fine.rho = 1.02;
        const GridField u = cosine_mode(g, 1);
        const auto ext = cs_extend(u, s, fine);
        const double exact = beta_s(s) * beta_s(s) * std::pow(4.0 * kPi * kPi, 0.25) * 0.5;
        CHECK(extension_energy(ext) == doctest::Approx(exact).epsilon(5e-4));
    }
}

TEST_CASE("extension energy is additive over orthogonal modes and zero on constants") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{128, 0, 0}});
    GridField c(g);
    for (std::size_t i = 0; i < g.size(); ++i) c[i] = 2.0;
    CHECK(extension_energy(cs_extend(c, 0.5)) < 1e-14);

    const GridField u = cosine_mode(g, 1);
    const GridField v = cosine_mode(g, 4, 0.5);
    GridField w(g);
    for (std::size_t i = 0; i < g.size(); ++i) w[i] = u[i] + v[i];
    const double eu = extension_energy(cs_extend(u, 0.5));
    const double ev = extension_energy(cs_extend(v, 0.5));
    const double ew = extension_energy(cs_extend(w, 0.5));
    CHECK(ew == doctest::Approx(eu + ev).epsilon(1e-11));
}

TEST_CASE("extension-to-spectral energy ratio is mode independent") {
    // the same constant beta_s^2 must relate the extension energy to
    // lambda^{s/2}/2 for every frequency
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{256, 0, 0}});
    const double s = 0.5;
    std::vector<double> ratios;
    for (int k : {1, 2, 4, 8}) {
        const GridField u = cosine_mode(g, k);
        const double lam = 4.0 * kPi * kPi * k * k;
        ratios.push_back(extension_energy(cs_extend(u, s)) /
                         (std::pow(lam, 0.25) * 0.5));
    }
    double lo = ratios[0], hi = ratios[0];
    for (double r : ratios) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK((hi - lo) / lo < 5e-4);
    CHECK(ratios[0] == doctest::Approx(beta_s(s) * beta_s(s)).epsilon(5e-3));
}

TEST_CASE("localized extension energy grows with the radius up to the global value") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{128, 0, 0}});
    GridField u(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.point(i)[0];
        u[i] = std::cos(2.0 * kPi * x) + 0.4 * std::cos(6.0 * kPi * x);
    }
    const auto ext = cs_extend(u, 0.5);
    const double global = extension_energy(ext);
    const Pt center{0.5, 0.0, 0.0};
    double prev = 0.0;
    for (double r : {0.05, 0.1, 0.2, 0.3, 0.4, 0.5}) {
        const double e = extension_energy(ext, center, r);
        CHECK(e >= prev - 1e-14);
        CHECK(e <= global + 1e-12);
        prev = e;
    }
    CHECK_THROWS_AS((void)extension_energy(ext, center, 0.6), std::invalid_argument);
    CHECK_THROWS_AS((void)extension_energy(ext, center, -0.1), std::invalid_argument);
}

TEST_CASE("the extension minimizes the weighted Dirichlet energy") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{128, 0, 0}});
    const GridField u = cosine_mode(g, 1);
    auto ext = cs_extend(u, 0.5);
    const double e0 = extension_energy(ext);
    // compactly supported interior bump, both signs
    for (int sign : {+1, -1}) {
        auto pert = ext;
        const int jmid = static_cast<int>(ext.z_nodes.size()) / 3;
        for (int j = jmid - 2; j <= jmid + 2; ++j)
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double x = g.point(i)[0];
                pert.slices[j][i] += sign * 0.2 * std::exp(-40.0 * (x - 0.5) * (x - 0.5));
            }
        CHECK(extension_energy(pert) > e0);
    }
}

TEST_CASE("harmonicity residual of the degenerate equation") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{64, 0, 0}});
    GridField u(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.point(i)[0];
        u[i] = std::cos(2.0 * kPi * x) + 0.3 * std::cos(4.0 * kPi * x);
    }
    // the flux-difference residual converges at second order in log rho
    const double r_default = harmonicity_residual(cs_extend(u, 0.5));
    CHECK(r_default < 3e-2);

    ExtensionParams fine;
    fine.rho = 1.02;
    const double r_fine = harmonicity_residual(cs_extend(u, 0.5, fine));
    CHECK(r_fine < 1e-3);
    CHECK(r_fine < 0.25 * r_default);
}

TEST_CASE("monotonicity rows vanish for a pure phase") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{64, 0, 0}});
    GridField one(g);
    for (std::size_t i = 0; i < g.size(); ++i) one[i] = 1.0;
    const Pt center{0.5, 0.0, 0.0};
    const auto rows = phi_functional(one, 0.5, 0.05, center, {0.1, 0.2, 0.3});
    REQUIRE(rows.size() == 3);
    for (const auto& row : rows) {
        CHECK(std::abs(row.sobolev_part) < 1e-12);
        CHECK(std::abs(row.potential_part) < 1e-12);
        CHECK(std::abs(row.phi) < 1e-12);
    }
}

TEST_CASE("monotonicity functional rows are consistent and positive on a layer") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    Grid g(t1, GridSpec{{128, 0, 0}});
    GridField u(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.point(i)[0];
        u[i] = std::tanh(std::sin(2.0 * kPi * x) / 0.15);
    }
    const Pt center{0.25, 0.0, 0.0}; // on the interface
    const std::vector<double> radii{0.1, 0.2, 0.3, 0.4};
    const auto rows = phi_functional(u, 0.5, 0.05, center, radii);
    REQUIRE(rows.size() == radii.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].radius == doctest::Approx(radii[i]));
        CHECK(rows[i].phi > 0.0);
        CHECK(rows[i].sobolev_part > 0.0);
        CHECK(rows[i].potential_part > 0.0);
        CHECK(rows[i].phi ==
              doctest::Approx(rows[i].sobolev_part + rows[i].potential_part).epsilon(1e-12));
        CHECK(rows[i].quad_error >= 0.0);
        CHECK(std::isfinite(rows[i].quad_error));
    }

    CHECK_THROWS_AS((void)phi_functional(u, 0.5, -0.1, center, radii), std::invalid_argument);
    CHECK_THROWS_AS((void)phi_functional(u, 0.5, 0.05, center, {0.6}), std::invalid_argument);
}

TEST_CASE("monotonicity functional is invariant under exact rescaling") {
    // doubling the torus, the grid spacing, epsilon, and the radius leaves
    // phi unchanged; discretely this holds to roundoff because every grid
    // object scales exactly
    FlatTorus ta(1, {1.0, 0.0, 0.0});
    Grid ga(ta, GridSpec{{128, 0, 0}});
    GridField ua(ga);
    for (std::size_t i = 0; i < ga.size(); ++i) {
        const double x = ga.point(i)[0];
        ua[i] = std::tanh(std::sin(2.0 * kPi * x) / 0.2);
    }
    FlatTorus tb(1, {2.0, 0.0, 0.0});
    Grid gb(tb, GridSpec{{128, 0, 0}});
    GridField ub(gb);
    for (std::size_t i = 0; i < gb.size(); ++i) ub[i] = ua[i];

    const auto ra = phi_functional(ua, 0.5, 0.05, Pt{0.25, 0.0, 0.0}, {0.2});
    const auto rb = phi_functional(ub, 0.5, 0.10, Pt{0.5, 0.0, 0.0}, {0.4});
    REQUIRE(ra.size() == 1);
    REQUIRE(rb.size() == 1);
    CHECK(rb[0].phi == doctest::Approx(ra[0].phi).epsilon(1e-8));
    CHECK(rb[0].sobolev_part == doctest::Approx(ra[0].sobolev_part).epsilon(1e-8));
    CHECK(rb[0].potential_part == doctest::Approx(ra[0].potential_part).epsilon(1e-8));
}
