#include "fractorus/minmax.hpp"

#include "fractorus/kernel.hpp"
#include "pair_sums.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>

namespace fractorus {

namespace {

void validate_s_mm(double s) {
    if (!(s > 0.0) || !(s < 1.0))
        throw std::invalid_argument("minmax: s must lie in (0, 1)");
}

void validate_samples(int p, int sphere_samples) {
    if (sphere_samples < 10 * (p + 1))
        throw std::invalid_argument(
            "minmax: sphere_samples must be at least 10 (p + 1)");
}

// Uniform on (0, 1), built from the top 53 bits of the generator so the
// sequence is identical on every platform.
double unit_open(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1p-53 + 0x1p-54;
}

// Box-Muller without the cached spare: two uniforms per draw keeps the
// stream position a pure function of the draw count.
double gaussian(std::mt19937_64& rng) {
    const double u1 = unit_open(rng);
    const double u2 = unit_open(rng);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

// Unit vector in R^{p+1} with the antipode folded out: the first
// coefficient beyond 1e-12 in magnitude is made positive. Members come in
// +-a pairs with equal energy, so one representative per pair suffices.
std::vector<double> sphere_sample(std::mt19937_64& rng, int p) {
    std::vector<double> a(static_cast<std::size_t>(p) + 1);
    double nrm = 0.0;
    do {
        nrm = 0.0;
        for (double& x : a) {
            x = gaussian(rng);
            nrm += x * x;
        }
        nrm = std::sqrt(nrm);
    } while (!(nrm > 1e-150));
    for (double& x : a) x /= nrm;
    for (double x : a) {
        if (std::abs(x) > 1e-12) {
            if (x < 0.0)
                for (double& y : a) y = -y;
            break;
        }
    }
    return a;
}

int poly_degree(const std::vector<double>& a) {
    for (int k = static_cast<int>(a.size()) - 1; k >= 0; --k)
        if (a[static_cast<std::size_t>(k)] != 0.0) return k;
    return -1;
}

double poly_eval(const std::vector<double>& a, int deg, double z) {
    double v = a[static_cast<std::size_t>(deg)];
    for (int k = deg - 1; k >= 0; --k)
        v = v * z + a[static_cast<std::size_t>(k)];
    return v;
}

double poly_deriv(const std::vector<double>& a, int deg, double z) {
    double v = deg * a[static_cast<std::size_t>(deg)];
    for (int k = deg - 1; k >= 1; --k)
        v = v * z + k * a[static_cast<std::size_t>(k)];
    return deg >= 1 ? v : 0.0;
}

// Real roots of P_a via the companion matrix, each polished by Newton and
// kept only if the polished residual is small relative to the coefficient
// scale. Sorted ascending.
std::vector<double> real_roots(const std::vector<double>& a) {
    const int deg = poly_degree(a);
    if (deg <= 0) {
        if (deg < 0)
            throw std::invalid_argument("sweepout: zero coefficient vector");
        return {};
    }
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
    const double lead = a[static_cast<std::size_t>(deg)];
    for (int k = 0; k < deg; ++k)
        comp(k, deg - 1) = -a[static_cast<std::size_t>(k)] / lead;
    for (int k = 1; k < deg; ++k) comp(k, k - 1) = 1.0;
    const Eigen::EigenSolver<Eigen::MatrixXd> es(comp);

    std::vector<double> roots;
    for (int k = 0; k < deg; ++k) {
        const std::complex<double> ev = es.eigenvalues()(k);
        if (std::abs(ev.imag()) > 1e-6 * (1.0 + std::abs(ev.real())))
            continue;
        double r = ev.real();
        for (int it = 0; it < 3; ++it) {
            const double f = poly_eval(a, deg, r);
            const double fp = poly_deriv(a, deg, r);
            if (fp == 0.0) break;
            const double step = f / fp;
            if (!std::isfinite(step)) break;
            r -= step;
        }
        double scale = 0.0;
        const double m = std::max(1.0, std::abs(r));
        double pw = 1.0;
        for (int j = 0; j <= deg; ++j) {
            scale += std::abs(a[static_cast<std::size_t>(j)]) * pw;
            pw *= m;
        }
        if (std::abs(poly_eval(a, deg, r)) <= 1e-7 * scale)
            roots.push_back(r);
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

// Patch assignment and virtual coordinate, fixed by the cover alone: grid
// point x joins the first center within 3r and maps to
// z = 3r (2i + 1) + first min-image coordinate of x - q_i.
struct CoverFrame {
    std::vector<int> patch;
    std::vector<double> zline;
};

CoverFrame build_frame(const Grid& g, const BallCover& cover) {
    if (cover.count() < 1)
        throw std::invalid_argument("sweepout: empty ball cover");
    const double r = cover.radius;
    CoverFrame fr;
    fr.patch.assign(g.size(), -1);
    fr.zline.assign(g.size(), 0.0);
    const FlatTorus& torus = g.torus();
    for (int i = 0; i < cover.count(); ++i) {
        const Pt& q = cover.centers[static_cast<std::size_t>(i)];
        const std::vector<std::uint8_t> mask = g.ball_mask(q, 3.0 * r);
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            if (!mask[idx] || fr.patch[idx] >= 0) continue;
            fr.patch[idx] = i;
            const Pt x = g.point(idx);
            fr.zline[idx] =
                3.0 * r * (2.0 * i + 1.0) + torus.min_image(x[0] - q[0], 0);
        }
    }
    for (std::size_t idx = 0; idx < g.size(); ++idx)
        if (fr.patch[idx] < 0)
            throw std::runtime_error(
                "sweepout: cover dilation misses a grid point");
    return fr;
}

// sign P_a(z) between consecutive real roots: the leading sign, flipped
// once per root beyond z. Exact zeros of P land on the right-hand sign.
GridField member_field(const Grid& g, const CoverFrame& fr,
                       const std::vector<double>& a) {
    const int deg = poly_degree(a);
    if (deg < 0)
        throw std::invalid_argument("sweepout: zero coefficient vector");
    const double lead_sign =
        a[static_cast<std::size_t>(deg)] > 0.0 ? 1.0 : -1.0;
    const std::vector<double> roots = real_roots(a);
    GridField u(g);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const double z = fr.zline[idx];
        const std::size_t above =
            roots.end() -
            std::upper_bound(roots.begin(), roots.end(), z);
        u.v[idx] = (above & 1u) ? -lead_sign : lead_sign;
    }
    return u;
}

// Corrected pair-sum energy of a +-1 field; identical to the grid
// s-perimeter and to the phase-field energy of the same field.
double sharp_energy(const GridField& u, const std::vector<double>& table,
                    double defect) {
    const double faces =
        detail::face_sum(u, [](std::size_t, std::size_t) { return 1.0; });
    return detail::quarter_pair_sum(u, table) + defect * faces;
}

double member_energy(const Grid& g, const GridField& u, double s,
                     SweepMode mode, const std::vector<double>& table,
                     double defect) {
    if (mode == SweepMode::sharp_interface) return sharp_energy(u, table, defect);
    ACParams prm;
    prm.s = s;
    prm.epsilon = 1.0; // inert: the field is exactly +-1
    (void)g;
    return energy(u, prm).total;
}

double raw_ac_energy(const GridField& u, const ACParams& prm) {
    const Grid& g = u.grid;
    const SpectralField su = to_spectral(u);
    double sob = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
        sob += std::pow(g.lambda(k), 0.5 * prm.s) * std::norm(su.c[k]);
    sob *= 0.5;
    const double pref = std::pow(prm.epsilon, -prm.s);
    double pot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double q = 1.0 - u[i] * u[i];
        pot += 0.25 * q * q;
    }
    return sob + pref * g.weight() * pot;
}

// Hill-climb from a sampled argmax to the energy plateau of the family.
// The sharp energy is piecewise constant in a (interfaces move cell by
// cell), so strict-improvement steps with shrinking jitter terminate on a
// maximal plateau; for stripes that plateau is the exactly grid-balanced
// configuration, which downstream flows need to sit on.
std::vector<double> climb_argmax(const Grid& g, const CoverFrame& fr,
                                 const std::vector<double>& table,
                                 double defect, std::vector<double> a,
                                 std::mt19937_64& rng) {
    double best = sharp_energy(member_field(g, fr, a), table, defect);
    const int p = static_cast<int>(a.size()) - 1;
    for (double step : {0.3, 0.1, 0.03, 0.01, 0.003}) {
        int stale = 0;
        while (stale < 8 * (p + 1)) {
            std::vector<double> cand(a);
            double nrm = 0.0;
            for (double& x : cand) {
                x += step * gaussian(rng);
                nrm += x * x;
            }
            nrm = std::sqrt(nrm);
            if (!(nrm > 1e-150)) {
                ++stale;
                continue;
            }
            for (double& x : cand) x /= nrm;
            const double e =
                sharp_energy(member_field(g, fr, cand), table, defect);
            if (e > best) {
                best = e;
                a = std::move(cand);
                stale = 0;
            } else {
                ++stale;
            }
        }
    }
    for (double x : a) {
        if (std::abs(x) > 1e-12) {
            if (x < 0.0)
                for (double& y : a) y = -y;
            break;
        }
    }
    return a;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

} // namespace

BallCover ball_cover(const Grid& grid, int p, std::uint64_t seed) {
    if (p < 1 || p > 64)
        throw std::invalid_argument("ball_cover: p must lie in [1, 64]");
    const int n = grid.dim();
    const double r = (grid.torus().min_side() / 6.0) *
                     std::pow(static_cast<double>(p), -1.0 / n);
    if (r < grid.max_h())
        std::fprintf(stderr,
                     "ball_cover: radius below one cell at p = %d; refine "
                     "the grid\n",
                     p);

    std::vector<std::size_t> order(grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    BallCover cover;
    cover.p = p;
    cover.radius = r;
    const FlatTorus& torus = grid.torus();
    for (std::size_t idx : order) {
        const Pt x = grid.point(idx);
        bool clear = true;
        for (const Pt& q : cover.centers)
            if (torus.geodesic_distance(x, q) < 2.0 * r) {
                clear = false;
                break;
            }
        if (clear) cover.centers.push_back(x);
    }

    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const Pt x = grid.point(idx);
        bool covered = false;
        for (const Pt& q : cover.centers)
            if (torus.geodesic_distance(x, q) < 3.0 * r) {
                covered = true;
                break;
            }
        if (!covered)
            throw std::runtime_error(
                "ball_cover: 3r dilation fails to cover the grid");
    }
    return cover;
}

SweepoutMember sweepout_member(const Grid& grid, const BallCover& cover,
                               const std::vector<double>& a, double s) {
    validate_s_mm(s);
    if (static_cast<int>(a.size()) != cover.p + 1)
        throw std::invalid_argument(
            "sweepout_member: coefficient vector must have p + 1 entries");
    const CoverFrame fr = build_frame(grid, cover);
    SweepoutMember m;
    m.a = a;
    const GridField u = member_field(grid, fr, a);
    m.set = make_from_field(u);
    const std::vector<double> table = kernel_table(grid, s);
    const double defect = detail::face_defect_scale(grid, s);
    m.energy.sobolev = sharp_energy(u, table, defect);
    m.energy.potential = 0.0;
    m.energy.total = m.energy.sobolev;
    return m;
}

ScalingRow sweepout_max_energy(const Grid& grid, const BallCover& cover,
                               double s, int sphere_samples,
                               std::uint64_t seed) {
    validate_s_mm(s);
    validate_samples(cover.p, sphere_samples);
    const CoverFrame fr = build_frame(grid, cover);
    const std::vector<double> table = kernel_table(grid, s);
    const double defect = detail::face_defect_scale(grid, s);

    std::mt19937_64 rng(seed);
    ScalingRow row;
    row.p = cover.p;
    row.cover_count = cover.count();
    row.radius = cover.radius;
    row.max_energy = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < sphere_samples; ++k) {
        const std::vector<double> a = sphere_sample(rng, cover.p);
        const GridField u = member_field(grid, fr, a);
        const double e = sharp_energy(u, table, defect);
        const bool better =
            e > row.max_energy ||
            (e == row.max_energy &&
             std::lexicographical_compare(a.begin(), a.end(),
                                          row.argmax_a.begin(),
                                          row.argmax_a.end()));
        if (better) {
            row.max_energy = e;
            row.argmax_a = a;
        }
    }
    row.scaled = (1.0 - s) * row.max_energy;
    return row;
}

ScalingReport scaling_experiment(const Grid& grid,
                                 const std::vector<int>& p_range, double s,
                                 SweepMode mode, int sphere_samples,
                                 std::uint64_t seed) {
    validate_s_mm(s);
    if (p_range.size() < 4)
        throw std::invalid_argument(
            "scaling_experiment: need at least four p values");
    for (std::size_t i = 0; i < p_range.size(); ++i) {
        if (p_range[i] < 1 || p_range[i] > 12)
            throw std::invalid_argument(
                "scaling_experiment: p values must lie in [1, 12]");
        if (i > 0 && p_range[i] <= p_range[i - 1])
            throw std::invalid_argument(
                "scaling_experiment: p values must increase strictly");
    }

    ScalingReport report;
    report.s = s;
    report.mode = mode;
    report.target = s / grid.dim();
    for (int p : p_range) {
        const std::uint64_t sp = mix_seed(seed, static_cast<std::uint64_t>(p));
        const BallCover cover = ball_cover(grid, p, sp);
        ScalingRow row =
            sweepout_max_energy(grid, cover, s, sphere_samples, mix_seed(sp, 1));
        if (mode == SweepMode::allen_cahn) {
            const CoverFrame fr = build_frame(grid, cover);
            const GridField u = member_field(grid, fr, row.argmax_a);
            row.max_energy = member_energy(grid, u, s, mode, {}, 0.0);
            row.scaled = (1.0 - s) * row.max_energy;
        }
        report.rows.push_back(std::move(row));
    }

    const std::size_t m = report.rows.size();
    double sx = 0.0, sy = 0.0;
    std::vector<double> xs(m), ys(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(report.rows[i].scaled > 0.0))
            throw std::runtime_error(
                "scaling_experiment: nonpositive max energy");
        xs[i] = std::log(static_cast<double>(report.rows[i].p));
        ys[i] = std::log(report.rows[i].scaled);
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    report.slope = sxy / sxx;
    const double icept = my - report.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double e = ys[i] - (icept + report.slope * xs[i]);
        ssr += e * e;
    }
    report.slope_stderr =
        std::sqrt(ssr / (static_cast<double>(m) - 2.0) / sxx);
    return report;
}

std::string scaling_csv(const ScalingReport& report) {
    std::string out = "p,N,r,max_energy,scaled\n";
    char buf[160];
    for (const ScalingRow& row : report.rows) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g\n", row.p,
                      row.cover_count, row.radius, row.max_energy, row.scaled);
        out += buf;
    }
    return out;
}

std::string scaling_json(const ScalingReport& report) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "{\"slope\": %.17g, \"stderr\": %.17g, \"target\": %.17g}\n",
                  report.slope, report.slope_stderr, report.target);
    return std::string(buf);
}

BorsukReport borsuk_probe(const Grid& grid, const BallCover& cover, double s,
                          int sphere_samples, std::uint64_t seed) {
    validate_s_mm(s);
    const int p = cover.p;
    validate_samples(p, sphere_samples);
    if (cover.count() < p)
        throw std::invalid_argument(
            "borsuk_probe: cover holds fewer than p balls");

    const CoverFrame fr = build_frame(grid, cover);
    std::vector<std::vector<std::size_t>> balls(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) {
        const std::vector<std::uint8_t> mask =
            grid.ball_mask(cover.centers[static_cast<std::size_t>(i)],
                           cover.radius);
        for (std::size_t idx = 0; idx < grid.size(); ++idx)
            if (mask[idx]) balls[static_cast<std::size_t>(i)].push_back(idx);
        if (balls[static_cast<std::size_t>(i)].empty())
            throw std::runtime_error(
                "borsuk_probe: a cover ball contains no grid point");
    }

    std::mt19937_64 rng(seed);
    BorsukReport report;
    report.samples = sphere_samples;
    report.max_average = std::numeric_limits<double>::infinity();
    for (int k = 0; k < sphere_samples; ++k) {
        const std::vector<double> a = sphere_sample(rng, p);
        const GridField u = member_field(grid, fr, a);
        double score = 0.0;
        for (const auto& ball : balls) {
            double acc = 0.0;
            for (std::size_t idx : ball) acc += u[idx];
            score = std::max(score, std::abs(acc / ball.size()));
        }
        const bool better =
            score < report.max_average ||
            (score == report.max_average &&
             std::lexicographical_compare(a.begin(), a.end(),
                                          report.witness_a.begin(),
                                          report.witness_a.end()));
        if (better) {
            report.max_average = score;
            report.witness_a = a;
        }
    }

    const GridField u = member_field(grid, fr, report.witness_a);
    const SetIndicator set = make_from_field(u);
    report.c0 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < p; ++i) {
        BorsukBallRow row;
        row.ball = i;
        double acc = 0.0;
        for (std::size_t idx : balls[static_cast<std::size_t>(i)])
            acc += u[idx];
        row.average = acc / balls[static_cast<std::size_t>(i)].size();
        const SetIndicator ball = make_ball(
            grid, cover.centers[static_cast<std::size_t>(i)], cover.radius);
        row.localized_energy = per_s_localized(set, ball, s);
        report.c0 = std::min(
            report.c0, (1.0 - s) * row.localized_energy *
                           std::pow(cover.radius, s - grid.dim()));
        report.rows.push_back(row);
    }
    return report;
}

MountainPassReport mountain_pass(const GridField& u_minus,
                                 const GridField& u_plus,
                                 const ACParams& params, int nodes) {
    if (nodes < 16)
        throw std::invalid_argument("mountain_pass: need at least 16 nodes");
    const Grid& g = u_minus.grid;
    if (!detail::same_grid(g, u_plus.grid))
        throw std::invalid_argument(
            "mountain_pass: endpoints live on different grids");
    const double rn_minus = norm_sup(residual(u_minus, params));
    const double rn_plus = norm_sup(residual(u_plus, params));
    if (rn_minus > params.tol_residual * 1.0001 ||
        rn_plus > params.tol_residual * 1.0001)
        throw std::invalid_argument(
            "mountain_pass: endpoints must be converged minimizers");

    GridField gap = u_plus;
    for (std::size_t i = 0; i < g.size(); ++i) gap.v[i] -= u_minus[i];
    if (norm_l2(gap) < 1e-10)
        throw std::invalid_argument("mountain_pass: endpoints coincide");

    // Straight interpolation plus a deterministic transverse bump; the
    // unperturbed path can thread stationary points of high index (for
    // +-1 endpoints it passes through u = 0 exactly).
    GridField bump(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Pt x = g.point(i);
        bump.v[i] = std::cos(2.0 * std::numbers::pi * x[0] /
                             g.torus().side(0));
    }
    std::vector<GridField> path(static_cast<std::size_t>(nodes), GridField(g));
    for (int j = 0; j < nodes; ++j) {
        const double t = static_cast<double>(j) / (nodes - 1);
        GridField& node = path[static_cast<std::size_t>(j)];
        for (std::size_t i = 0; i < g.size(); ++i)
            node.v[i] = (1.0 - t) * u_minus[i] + t * u_plus[i] +
                        0.05 * std::sin(std::numbers::pi * t) * bump.v[i];
    }

    std::vector<double> mult(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        mult[i] = std::pow(g.lambda(i), 0.5 * params.s);
    const double pref = std::pow(params.epsilon, -params.s);

    const auto step_node = [&](GridField& u, double dt) {
        GridField wp(g);
        for (std::size_t i = 0; i < g.size(); ++i)
            wp.v[i] = u[i] * u[i] * u[i] - u[i];
        SpectralField su = to_spectral(u);
        const SpectralField sw = to_spectral(wp);
        for (std::size_t i = 0; i < g.size(); ++i)
            su.c[i] = (su.c[i] - dt * pref * sw.c[i]) / (1.0 + dt * mult[i]);
        u = to_physical(su);
    };

    const auto reparametrize = [&](std::vector<GridField>& nds) {
        std::vector<double> arc(nds.size(), 0.0);
        for (std::size_t j = 1; j < nds.size(); ++j) {
            GridField d = nds[j];
            for (std::size_t i = 0; i < g.size(); ++i) d.v[i] -= nds[j - 1][i];
            arc[j] = arc[j - 1] + norm_l2(d);
        }
        if (arc.back() < 1e-12)
            throw std::runtime_error("mountain_pass: path degenerated");
        std::vector<GridField> out = nds;
        for (std::size_t j = 1; j + 1 < nds.size(); ++j) {
            const double target =
                arc.back() * static_cast<double>(j) / (nds.size() - 1);
            std::size_t k = 0;
            while (k + 2 < nds.size() && arc[k + 1] < target) ++k;
            const double span = arc[k + 1] - arc[k];
            const double t = span > 0.0 ? (target - arc[k]) / span : 0.0;
            for (std::size_t i = 0; i < g.size(); ++i)
                out[j].v[i] = (1.0 - t) * nds[k][i] + t * nds[k + 1][i];
        }
        nds = std::move(out);
    };

    const auto path_max = [&](const std::vector<GridField>& nds) {
        double m = -std::numeric_limits<double>::infinity();
        for (const GridField& node : nds)
            m = std::max(m, raw_ac_energy(node, params));
        return m;
    };

    MountainPassReport report;
    double dt = params.flow_dt;
    double prev = path_max(path);
    report.sweep_max.push_back(prev);
    int plateau = 0;
    const int max_sweeps = 4000;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const std::vector<GridField> saved = path;
        for (int j = 1; j + 1 < nodes; ++j)
            step_node(path[static_cast<std::size_t>(j)], dt);
        reparametrize(path);
        const double cur = path_max(path);
        if (cur <= prev + 1e-12 * std::max(1.0, std::abs(prev))) {
            if (std::abs(cur - prev) <= 1e-11 * std::max(1.0, std::abs(cur)))
                ++plateau;
            else
                plateau = 0;
            prev = cur;
            report.sweep_max.push_back(cur);
            if (plateau >= 3 && sweep >= 30) break;
        } else {
            path = saved;
            dt *= 0.5;
            if (dt < 1e-10 * params.flow_dt) break;
        }
    }

    const double floor_energy =
        std::max(raw_ac_energy(u_minus, params), raw_ac_energy(u_plus, params));
    if (prev <= floor_energy + 1e-8 * std::max(1.0, std::abs(floor_energy)))
        throw std::runtime_error(
            "mountain_pass: path collapsed; the endpoints share a basin");

    std::size_t kbest = 1;
    double ebest = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j + 1 < path.size(); ++j) {
        const double e = raw_ac_energy(path[j], params);
        if (e > ebest) {
            ebest = e;
            kbest = j;
        }
    }

    GridField tau = path[kbest + 1];
    for (std::size_t i = 0; i < g.size(); ++i) tau.v[i] -= path[kbest - 1][i];
    const double tn = norm_l2(tau);
    if (tn < 1e-12)
        throw std::runtime_error("mountain_pass: degenerate tangent");
    for (std::size_t i = 0; i < g.size(); ++i) tau.v[i] /= tn;
    const SpectralField stau = to_spectral(tau);

    // Climbing refinement: reverse the force component along the (fixed)
    // path tangent and keep the fractional Laplacian implicit.
    GridField u = path[kbest];
    const double dtc = std::min(params.flow_dt,
                                0.25 * std::pow(params.epsilon, params.s));
    double rn = norm_sup(residual(u, params));
    for (int it = 0; it < params.max_iters; ++it) {
        if (rn <= 10.0 * params.tol_residual) break;
        const GridField r = residual(u, params);
        const double c = inner(r, tau);
        GridField wp(g);
        for (std::size_t i = 0; i < g.size(); ++i)
            wp.v[i] = u[i] * u[i] * u[i] - u[i];
        SpectralField su = to_spectral(u);
        const SpectralField sw = to_spectral(wp);
        for (std::size_t i = 0; i < g.size(); ++i)
            su.c[i] = (su.c[i] -
                       dtc * (pref * sw.c[i] - 2.0 * c * stau.c[i])) /
                      (1.0 + dtc * mult[i]);
        u = to_physical(su);
        rn = norm_sup(residual(u, params));
        if (!std::isfinite(rn) || rn > 1e8) break;
    }

    report.saddle = u;
    report.saddle_residual = rn;
    report.saddle_energy = energy(u, params);
    report.converged = std::isfinite(rn) && rn <= 10.0 * params.tol_residual;
    if (g.size() <= 4096) report.saddle_index = morse_index(u, params, 4);
    return report;
}

std::vector<EpsLimitRow> epsilon_limit_experiment(
    const Grid& grid, int p, double s, const std::vector<double>& eps_list,
    int sphere_samples, std::uint64_t seed) {
    validate_s_mm(s);
    if (eps_list.empty())
        throw std::invalid_argument("epsilon_limit: empty epsilon list");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0))
            throw std::invalid_argument("epsilon_limit: epsilon must be positive");
        if (i > 0 && eps_list[i] >= eps_list[i - 1])
            throw std::invalid_argument(
                "epsilon_limit: epsilon list must decrease strictly");
    }
    if (eps_list.back() < 2.0 * grid.max_h())
        throw std::invalid_argument(
            "epsilon_limit: smallest epsilon below two cells");

    const BallCover cover = ball_cover(grid, p, seed);
    const ScalingRow row =
        sweepout_max_energy(grid, cover, s, sphere_samples, mix_seed(seed, 1));
    const CoverFrame fr = build_frame(grid, cover);
    // The sampled argmax generically sits one cell off the family's energy
    // plateau; the flows below would slide off the critical point it
    // approximates, so climb the rest of the way first.
    const std::vector<double> table = kernel_table(grid, s);
    const double defect = detail::face_defect_scale(grid, s);
    std::mt19937_64 crng(mix_seed(seed, 2));
    const std::vector<double> a_star =
        climb_argmax(grid, fr, table, defect, row.argmax_a, crng);
    const GridField member = member_field(grid, fr, a_star);

    std::vector<EpsLimitRow> rows;
    std::vector<std::int8_t> prev_sign;
    for (double eps : eps_list) {
        SpectralField sm = to_spectral(member);
        for (std::size_t k = 0; k < grid.size(); ++k)
            sm.c[k] *= std::exp(-grid.lambda(k) * eps * eps / 8.0);
        GridField u0 = to_physical(sm);
        for (double& v : u0.v) v = std::clamp(v, -1.0, 1.0);

        ACParams prm;
        prm.s = s;
        prm.epsilon = eps;
        const ACSolution sol = gradient_flow(u0, prm);

        GridField th(grid);
        std::vector<std::int8_t> sign(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            sign[i] = sol.u[i] >= 0.0 ? 1 : -1;
            th.v[i] = sign[i];
        }
        EpsLimitRow out;
        out.epsilon = eps;
        out.sobolev = sol.energy.sobolev;
        out.potential = sol.energy.potential;
        out.per_threshold = per_s(make_from_field(th), s);
        if (!prev_sign.empty()) {
            std::size_t changed = 0;
            for (std::size_t i = 0; i < grid.size(); ++i)
                if (sign[i] != prev_sign[i]) ++changed;
            out.interface_drift = grid.weight() * changed;
        }
        out.converged = sol.converged;
        if (!sol.converged)
            std::fprintf(stderr,
                         "epsilon_limit: flow not converged at epsilon = %g "
                         "(residual %.3g)\n",
                         eps, sol.residual_norm);
        prev_sign = std::move(sign);
        rows.push_back(out);
    }
    return rows;
}

std::string eps_limit_csv(const std::vector<EpsLimitRow>& rows) {
    std::string out =
        "epsilon,sobolev,potential,per_threshold,interface_drift,converged\n";
    char buf[200];
    for (const EpsLimitRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                      r.epsilon, r.sobolev, r.potential, r.per_threshold,
                      r.interface_drift, r.converged ? 1 : 0);
        out += buf;
    }
    return out;
}

} // namespace fractorus
