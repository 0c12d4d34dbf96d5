#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fractorus/rng.hpp"
#include "fractorus/torus.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>

using namespace fractorus;

namespace {
constexpr double kPi = std::numbers::pi;

GridField random_field(const Grid& g, std::uint64_t seed) {
    GridField u(g);
    Rng rng(seed);
    for (auto& x : u.v) x = rng.uniform(-1.0, 1.0);
    return u;
}
} // namespace

TEST_CASE("min image picks the half-open shortest representative") {
    FlatTorus t1(1, {1.0, 0.0, 0.0});
    CHECK(t1.min_image(0.7, 0) == doctest::Approx(-0.3));
    CHECK(t1.min_image(-0.3, 0) == doctest::Approx(-0.3));
    CHECK(t1.min_image(0.5, 0) == doctest::Approx(0.5));
    CHECK(t1.min_image(-0.5, 0) == doctest::Approx(0.5));
    CHECK(t1.min_image(1.2, 0) == doctest::Approx(0.2));
    CHECK(t1.min_image(-3.3, 0) == doctest::Approx(-0.3));

    FlatTorus t2(2, {1.0, 2.0, 0.0});
    const Pt p{0.05, 0.1, 0.0};
    const Pt q{0.95, 1.9, 0.0};
    CHECK(t2.geodesic_distance(p, q) ==
          doctest::Approx(std::sqrt(0.01 + 0.04)).epsilon(1e-13));
    CHECK(t2.volume() == doctest::Approx(2.0));
    CHECK(t2.min_side() == doctest::Approx(1.0));

    const Pt w = t2.wrap({1.2, -0.5, 0.0});
    CHECK(w[0] == doctest::Approx(0.2));
    CHECK(w[1] == doctest::Approx(1.5));
}

TEST_CASE("grid layout, indices and frequencies") {
    Grid g(FlatTorus(2, {1.0, 2.0, 0.0}), GridSpec{{4, 6, 0}});
    CHECK(g.size() == 24);
    CHECK(g.h(0) == doctest::Approx(0.25));
    CHECK(g.h(1) == doctest::Approx(2.0 / 6.0));
    CHECK(g.weight() == doctest::Approx(2.0 / 24.0));
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        CHECK(g.flatten(g.unflatten(idx)) == idx);
    }
    CHECK(g.wrap_flatten({-1, 7, 0}) == g.flatten({3, 1, 0}));
    const Pt p = g.point(g.flatten({1, 2, 0}));
    CHECK(p[0] == doctest::Approx(0.25));
    CHECK(p[1] == doctest::Approx(2.0 / 3.0));

    Grid g1(FlatTorus(1, {1.0, 0.0, 0.0}), GridSpec{{8, 0, 0}});
    const int expect[8] = {0, 1, 2, 3, 4, -3, -2, -1};
    for (int j = 0; j < 8; ++j) CHECK(g1.freq(j, 0) == expect[j]);

    // lambda for k=1 on side 2 is (2 pi / 2)^2 = pi^2
    Grid g2(FlatTorus(1, {2.0, 0.0, 0.0}), GridSpec{{8, 0, 0}});
    CHECK(g2.lambda(1) == doctest::Approx(kPi * kPi).epsilon(1e-14));
    CHECK(g2.lambda(7) == doctest::Approx(kPi * kPi).epsilon(1e-14));
}

TEST_CASE("fft round trip and Parseval") {
    for (int dim = 1; dim <= 3; ++dim) {
        std::array<double, 3> L{1.0, 2.0, 0.5};
        std::array<int, 3> N{32, 8, 6};
        for (int i = dim; i < 3; ++i) {
            L[i] = 0.0;
            N[i] = 0;
        }
        Grid g(FlatTorus(dim, L), GridSpec{N});
        GridField u = random_field(g, 42 + dim);
        SpectralField su = to_spectral(u);
        GridField back = to_physical(su);
        double err = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            err = std::max(err, std::abs(u.v[i] - back.v[i]));
        CHECK(err < 1e-12);

        double phys = 0.0, spec = 0.0;
        for (double x : u.v) phys += x * x;
        phys *= g.weight();
        for (auto z : su.c) spec += std::norm(z);
        CHECK(phys == doctest::Approx(spec).epsilon(1e-11));
    }
}

TEST_CASE("cosine mode lands on the orthonormal-basis coefficients") {
    const double L = 2.0;
    Grid g(FlatTorus(1, {L, 0.0, 0.0}), GridSpec{{64, 0, 0}});
    GridField u(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        u.v[i] = std::cos(2.0 * kPi * g.point(i)[0] / L);
    SpectralField su = to_spectral(u);
    // u = (sqrt(vol)/2) (phi_1 + phi_{-1})
    const double expect = 0.5 * std::sqrt(L);
    CHECK(su.c[1].real() == doctest::Approx(expect).epsilon(1e-12));
    CHECK(su.c[63].real() == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::abs(su.c[0]) < 1e-13);
    CHECK(std::abs(su.c[2]) < 1e-13);

    GridField u2(g);
    for (std::size_t i = 0; i < g.size(); ++i) u2.v[i] = u.v[i] * u.v[i];
    CHECK(integral(u2) == doctest::Approx(L / 2.0).epsilon(1e-12));
    CHECK(inner(u, u) == doctest::Approx(L / 2.0).epsilon(1e-12));
    CHECK(norm_sup(u) == doctest::Approx(1.0));
}

TEST_CASE("spectral gradient matches analytic derivatives") {
    Grid g(FlatTorus(2, {1.0, 2.0, 0.0}), GridSpec{{32, 48, 0}});
    GridField u(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Pt p = g.point(i);
        u.v[i] = std::sin(2.0 * kPi * p[0]) * std::cos(2.0 * kPi * p[1] / 2.0);
    }
    GridField dx = gradient_axis(u, 0);
    GridField dy = gradient_axis(u, 1);
    GridField gsq = gradient_sq(u);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Pt p = g.point(i);
        const double ax = 2.0 * kPi * std::cos(2.0 * kPi * p[0]) * std::cos(kPi * p[1]);
        const double ay = -kPi * std::sin(2.0 * kPi * p[0]) * std::sin(kPi * p[1]);
        err = std::max(err, std::abs(dx.v[i] - ax));
        err = std::max(err, std::abs(dy.v[i] - ay));
        err = std::max(err, std::abs(gsq.v[i] - ax * ax - ay * ay));
    }
    CHECK(err < 1e-10);
}

TEST_CASE("ball mask area converges to the disc area") {
    Grid g(FlatTorus(2, {1.0, 1.0, 0.0}), GridSpec{{128, 128, 0}});
    const Pt c{0.5, 0.5, 0.0};
    const double r = 0.3;
    const auto mask = g.ball_mask(c, r);
    double area = 0.0;
    for (auto b : mask) area += b ? g.weight() : 0.0;
    CHECK(area == doctest::Approx(kPi * r * r).epsilon(0.02));
    // boundary points are decided by strict geodesic distance
    CHECK(mask[g.flatten({64, 64, 0})] == 1);
    CHECK(mask[g.flatten({0, 0, 0})] == 0);
}

TEST_CASE("save/load round trip preserves bytes and layout") {
    Grid g(FlatTorus(2, {1.0, 2.0, 0.0}), GridSpec{{8, 12, 0}});
    GridField u = random_field(g, 7);
    const std::string path = "tmp_field_roundtrip.bin";
    save_field(u, path);
    GridField v = load_field(path);
    REQUIRE(v.size() == u.size());
    CHECK(v.grid.same_layout(g));
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(u.v[i] == v.v[i]);
    std::remove(path.c_str());

    const std::string csv = "tmp_field.csv";
    export_csv(u, csv);
    std::ifstream in(csv);
    REQUIRE(in.good());
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == u.size() + 1); // header + one row per point
    in.close();
    std::remove(csv.c_str());
}

TEST_CASE("rng is deterministic and well ranged") {
    Rng a(12345), b(12345);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng r(9);
    for (int i = 0; i < 1000; ++i) {
        const double x = r.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    auto v = r.sphere(3);
    double nrm = 0.0;
    for (double x : v) nrm += x * x;
    CHECK(nrm == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("constructor validation") {
    CHECK_THROWS(FlatTorus(0, {1.0, 0.0, 0.0}));
    CHECK_THROWS(FlatTorus(4, {1.0, 1.0, 1.0}));
    CHECK_THROWS(FlatTorus(1, {-1.0, 0.0, 0.0}));
    CHECK_THROWS(Grid(FlatTorus(1, {1.0, 0.0, 0.0}), GridSpec{{5, 0, 0}}));
    CHECK_THROWS(Grid(FlatTorus(1, {1.0, 0.0, 0.0}), GridSpec{{2, 0, 0}}));
}
