#include "fractorus/kernel.hpp"

#include "fractorus/fft.hpp"
#include "fractorus/special.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

namespace fractorus {

namespace {

// Integer image offsets in the box [-m, m]^n, increasing |m|^2 with
// lexicographic tie-break: the fixed summation order for all image sums.
const std::vector<std::array<int, 3>>& ordered_images(int n, int m) {
    static std::map<std::pair<int, int>, std::vector<std::array<int, 3>>> cache;
    auto key = std::make_pair(n, m);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::vector<std::array<int, 3>> out;
    const int lo1 = n >= 2 ? -m : 0, hi1 = n >= 2 ? m : 0;
    const int lo2 = n >= 3 ? -m : 0, hi2 = n >= 3 ? m : 0;
    for (int a = -m; a <= m; ++a)
        for (int b = lo1; b <= hi1; ++b)
            for (int c = lo2; c <= hi2; ++c) out.push_back({a, b, c});
    std::sort(out.begin(), out.end(), [](const auto& u, const auto& v) {
        const long nu = long(u[0]) * u[0] + long(u[1]) * u[1] + long(u[2]) * u[2];
        const long nv = long(v[0]) * v[0] + long(v[1]) * v[1] + long(v[2]) * v[2];
        if (nu != nv) return nu < nv;
        return u < v;
    });
    return cache.emplace(key, std::move(out)).first->second;
}

Pt min_image_diff(const FlatTorus& torus, const Pt& x, const Pt& y) {
    Pt d{0.0, 0.0, 0.0};
    for (int i = 0; i < torus.dim(); ++i) d[i] = torus.min_image(x[i] - y[i], i);
    return d;
}

double heat_spectral_d(const FlatTorus& torus, const Pt& d, double t, double tol) {
    const int n = torus.dim();
    const double efold = std::log(1.0 / tol);
    int kmax[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i)
        kmax[i] = int(std::ceil(torus.side(i) / (2.0 * M_PI) * std::sqrt(efold / t)));
    long double sum = 0.0L;
    for (int k0 = -kmax[0]; k0 <= kmax[0]; ++k0)
        for (int k1 = -kmax[1]; k1 <= kmax[1]; ++k1)
            for (int k2 = -kmax[2]; k2 <= kmax[2]; ++k2) {
                const int kk[3] = {k0, k1, k2};
                double lambda = 0.0, phase = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double w = 2.0 * M_PI * kk[i] / torus.side(i);
                    lambda += w * w;
                    phase += w * d[i];
                }
                sum += std::exp(-lambda * t) * std::cos(phase);
            }
    return double(sum) / torus.volume();
}

// Image box needed so that discarded Gaussians are below tol.
int lattice_box_needed(const FlatTorus& torus, double t, double tol) {
    const double reach = std::sqrt(4.0 * t * std::log(1.0 / tol));
    return int(std::ceil(reach / torus.min_side())) + 1;
}

double heat_lattice_d(const FlatTorus& torus, const Pt& d, double t, int mbox) {
    const int n = torus.dim();
    const double pref = std::pow(4.0 * M_PI * t, -0.5 * n);
    long double sum = 0.0L;
    for (const auto& m : ordered_images(n, mbox)) {
        double q2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double yi = d[i] + torus.side(i) * m[i];
            q2 += yi * yi;
        }
        sum += std::exp(-q2 / (4.0 * t));
    }
    return pref * double(sum);
}

double simpson(const std::function<double(double)>& f, double lo, double hi, int npts) {
    // npts odd
    const double h = (hi - lo) / (npts - 1);
    double sum = f(lo) + f(hi);
    for (int i = 1; i < npts - 1; ++i) sum += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

// A(u) = int_0^u (1+v^2)^{-p/2} dv via the v = tan(theta) substitution.
double profile_A(double u, double p) {
    const double th = std::atan(u);
    if (th == 0.0) return 0.0;
    return simpson([p](double a) { return std::pow(std::cos(a), p - 2.0); }, 0.0, th, 257);
}

// integral over {x in [xl, xr]} x {y > b} of (x^2+y^2)^{-p/2}, b > 0.
double strip_integral(double xl, double xr, double b, double p) {
    const double main = (xr - xl) * std::pow(b, 1.0 - p) / (p - 1.0);
    auto corr = [&](double v) {
        if (v <= 0.0) return 0.0;
        const double y = b / v;
        const double rem = (xr - xl) / y - (profile_A(xr / y, p) - profile_A(xl / y, p));
        return std::pow(b, 2.0 - p) * std::pow(v, p - 3.0) * rem;
    };
    return main - simpson(corr, 0.0, 1.0, 257);
}

// integral over z with |z| beyond (cneg, cpos) of (q^2+z^2)^{-(3+s)/2}.
double bar_z_tail(double q2, double cn, double cp, double s) {
    auto side = [&](double c) {
        auto f = [&](double w) {
            if (w <= 0.0) return 0.0;
            const double z = c / w;
            return std::pow(q2 + z * z, -0.5 * (3.0 + s)) * c / (w * w);
        };
        return simpson(f, 0.0, 1.0, 65);
    };
    return side(cn) + side(cp);
}

// Continuum correction for the images discarded beyond the box |m_i| <= M:
// sum_{m outside} |d + L m|^{-(n+s)} ~ (1/vol) * integral of |y|^{-(n+s)}
// over the complement of the box centred at d with half-sides (M+1/2) L_i.
// In 1D the tail is summed by midpoint Euler-Maclaurin through f''' instead,
// which is accurate to ~1e-13 at M = 50.
double riesz_tail(const FlatTorus& torus, const Pt& d, double s, int M) {
    const int n = torus.dim();
    if (n == 1) {
        const double L = torus.side(0);
        auto side = [&](double off) {
            const double a = off + (M + 0.5) * L;
            const double f1 = -(1.0 + s) * L * std::pow(a, -(2.0 + s));
            const double f3 = -(1.0 + s) * (2.0 + s) * (3.0 + s) * L * L * L *
                              std::pow(a, -(4.0 + s));
            return std::pow(a, -s) / (s * L) + f1 / 24.0 - 7.0 * f3 / 5760.0;
        };
        return side(d[0]) + side(-d[0]);
    }

    // half-sides of the excluded box, per axis and side, in physical units
    double neg[3], pos[3];
    for (int i = 0; i < n; ++i) {
        neg[i] = (M + 0.5) * torus.side(i) - d[i];
        pos[i] = (M + 0.5) * torus.side(i) + d[i];
    }
    const double inv_vol = 1.0 / torus.volume();

    if (n == 2) {
        const double G2 = std::sqrt(M_PI) *
                          std::exp(std::lgamma(0.5 * (1.0 + s)) - std::lgamma(0.5 * (2.0 + s)));
        double acc = G2 * (std::pow(pos[0], -s) + std::pow(neg[0], -s)) / s;
        acc += strip_integral(-neg[0], pos[0], pos[1], 2.0 + s);
        acc += strip_integral(-neg[0], pos[0], neg[1], 2.0 + s);
        return inv_vol * acc;
    }

    // n == 3: slabs in x, z-reduced strips in y, quadrature bars in z
    const double G3 = 2.0 * M_PI / (1.0 + s);
    const double G2r = std::sqrt(M_PI) *
                       std::exp(std::lgamma(0.5 * (2.0 + s)) - std::lgamma(0.5 * (3.0 + s)));
    double acc = G3 * (std::pow(pos[0], -s) + std::pow(neg[0], -s)) / s;
    acc += G2r * strip_integral(-neg[0], pos[0], pos[1], 2.0 + s);
    acc += G2r * strip_integral(-neg[0], pos[0], neg[1], 2.0 + s);
    auto bar = [&]() {
        const int nx = 129, ny = 129;
        const double x0 = -neg[0], x1 = pos[0], y0 = -neg[1], y1 = pos[1];
        const double hx = (x1 - x0) / (nx - 1), hy = (y1 - y0) / (ny - 1);
        double total = 0.0;
        for (int i = 0; i < nx; ++i) {
            const double wx = (i == 0 || i == nx - 1) ? 0.5 : 1.0;
            for (int j = 0; j < ny; ++j) {
                const double wy = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
                const double x = x0 + i * hx, y = y0 + j * hy;
                total += wx * wy * bar_z_tail(x * x + y * y, neg[2], pos[2], s);
            }
        }
        return total * hx * hy;
    };
    acc += bar();
    return inv_vol * acc;
}

double ks_lattice(const FlatTorus& torus, const Pt& d, const KernelParams& p) {
    const int n = torus.dim();
    long double sum = 0.0L;
    for (const auto& m : ordered_images(n, p.m_max)) {
        double q2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double yi = d[i] + torus.side(i) * m[i];
            q2 += yi * yi;
        }
        sum += std::pow(q2, -0.5 * (n + p.s));
    }
    return alpha_ns(n, p.s) * (double(sum) + riesz_tail(torus, d, p.s, p.m_max));
}

double ks_subordination(const FlatTorus& torus, const Pt& d, const KernelParams& p) {
    const int n = torus.dim();
    const double s = p.s;
    const double vol = torus.volume();
    const double Lmin = torus.min_side();
    double d2 = 0.0;
    for (int i = 0; i < n; ++i) d2 += d[i] * d[i];

    // Regularised plateau split: integrate H - (1/vol) e^{-c/t} numerically
    // (doubly exponential decay both ways in tau = log t) and add back
    // (1/vol) Gamma(s/2) c^{-s/2}, the exact subordination integral of the
    // regulariser. Without the split the integrand only decays like
    // e^{-s tau/2} as t -> infinity because H plateaus at 1/vol.
    const double c = 0.25 * Lmin * Lmin;
    const double q = std::min(0.25 * d2, c);
    const double tau_min = std::log(q) - std::log(185.0);
    double lambda1 = std::pow(2.0 * M_PI / torus.side(0), 2.0);
    for (int i = 1; i < n; ++i)
        lambda1 = std::min(lambda1, std::pow(2.0 * M_PI / torus.side(i), 2.0));
    const double tau_max =
        std::max((50.0 + std::max(0.0, std::log(c / vol))) / (1.0 + 0.5 * s),
                 std::log(46.0 / lambda1)) +
        2.0;

    const double t_sw = Lmin * Lmin / 12.0;
    const int qpu = std::max(1, p.quad_pts_per_unit);
    int npts = std::max(16, int(std::ceil((tau_max - tau_min) * qpu))) + 1;

    auto integrand = [&](double tau) {
        const double t = std::exp(tau);
        double H;
        if (t <= t_sw)
            H = heat_lattice_d(torus, d, t, lattice_box_needed(torus, t, 1e-20));
        else
            H = heat_spectral_d(torus, d, t, 1e-20);
        return (H - std::exp(-c / t) / vol) * std::exp(-0.5 * s * tau);
    };
    const double h = (tau_max - tau_min) / (npts - 1);
    long double acc = 0.5L * (integrand(tau_min) + integrand(tau_max));
    for (int i = 1; i < npts - 1; ++i) acc += integrand(tau_min + i * h);
    const double integral = double(acc) * h;

    const double plateau = std::exp(std::lgamma(0.5 * s)) * std::pow(c, -0.5 * s) / vol;
    return subordination_prefactor(s) * (integral + plateau);
}

} // namespace

double heat_kernel(const FlatTorus& torus, const Pt& x, const Pt& y, double t,
                   HeatMethod method, const KernelParams& params) {
    if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: t must be positive");
    const Pt d = min_image_diff(torus, x, y);
    if (method == HeatMethod::spectral)
        return heat_spectral_d(torus, d, t, params.spectral_tol);
    const int need = lattice_box_needed(torus, t, params.spectral_tol);
    if (need > params.m_max)
        throw std::runtime_error("heat_kernel: lattice image cutoff m_max too small "
                                 "for requested t (truncation above tolerance)");
    return heat_lattice_d(torus, d, t, need);
}

double ks_kernel(const FlatTorus& torus, const Pt& x, const Pt& y,
                 const KernelParams& params, KsMethod method) {
    if (!(params.s > 0.0 && params.s < 2.0))
        throw std::invalid_argument("ks_kernel: s must lie in (0,2)");
    if (params.m_max < 1) throw std::invalid_argument("ks_kernel: m_max must be >= 1");
    const Pt d = min_image_diff(torus, x, y);
    double d2 = 0.0;
    for (int i = 0; i < torus.dim(); ++i) d2 += d[i] * d[i];
    if (d2 < 1e-28 * torus.min_side() * torus.min_side())
        throw std::invalid_argument("ks_kernel: x = y modulo the lattice (singular)");
    return method == KsMethod::lattice_riesz ? ks_lattice(torus, d, params)
                                             : ks_subordination(torus, d, params);
}

namespace {

std::vector<double> kernel_table_impl(const Grid& grid, double s, const Pt& offset,
                                      bool shifted) {
    if (!(s > 0.0 && s < 2.0)) throw std::invalid_argument("kernel_table: s in (0,2)");
    const FlatTorus& torus = grid.torus();
    const int n = grid.dim();
    const double vol = torus.volume();
    const double Lmin = torus.min_side();
    const double nu = 0.5 * (n + s);
    const double lg_nu = std::lgamma(nu);

    // Ewald split of the periodised Riesz sum: short-range incomplete-gamma
    // images within |m_i| <= 2, long-range part as a Fourier series evaluated
    // by one inverse FFT over the whole grid. eta is chosen so that images
    // beyond the short-range box and Fourier modes beyond k_max are below
    // e^{-46} relative. A constant off-lattice offset enters the Fourier part
    // as a per-mode phase and the short-range part as a coordinate shift.
    const double eta = 7.4 / (Lmin * Lmin);

    std::vector<int> dims = grid.dims_vec();
    int kmax[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) {
        kmax[i] = int(std::ceil(torus.side(i) * std::sqrt(46.0 * eta) / M_PI));
        if (2 * kmax[i] >= grid.npts(i))
            throw std::invalid_argument("kernel_table: grid too coarse for the "
                                        "Ewald Fourier cutoff on this torus");
    }

    const double four_pref = std::pow(M_PI, 0.5 * n) * std::exp(-lg_nu) / vol;
    std::vector<std::complex<double>> coef(grid.size(), 0.0);
    for (int k0 = -kmax[0]; k0 <= kmax[0]; ++k0)
        for (int k1 = -kmax[1]; k1 <= kmax[1]; ++k1)
            for (int k2 = -kmax[2]; k2 <= kmax[2]; ++k2) {
                const int kk[3] = {k0, k1, k2};
                double khat2 = 0.0;
                double phase = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double r = kk[i] / torus.side(i);
                    khat2 += r * r;
                    phase += r * offset[i];
                }
                double value;
                if (khat2 == 0.0) {
                    value = four_pref * (2.0 / s) * std::pow(eta, 0.5 * s);
                } else {
                    const double b = M_PI * M_PI * khat2;
                    value = four_pref * std::pow(b, 0.5 * s) * upper_gamma(-0.5 * s, b / eta);
                }
                std::array<int, 3> idx{0, 0, 0};
                for (int i = 0; i < n; ++i) idx[i] = (kk[i] % grid.npts(i) + grid.npts(i)) % grid.npts(i);
                coef[grid.flatten(idx)] +=
                    value * std::polar(1.0, 2.0 * M_PI * phase);
            }
    std::vector<std::complex<double>> four(grid.size());
    fft_for(dims).backward(coef.data(), four.data());

    const double alpha = alpha_ns(n, s);
    std::vector<double> table(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const std::array<int, 3> idx = grid.unflatten(j);
        Pt y{0.0, 0.0, 0.0};
        for (int i = 0; i < n; ++i)
            y[i] = torus.min_image(idx[i] * grid.h(i), i) + offset[i];
        double shortr = 0.0;
        for (const auto& m : ordered_images(n, 2)) {
            double q2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double yi = y[i] + torus.side(i) * m[i];
                q2 += yi * yi;
            }
            const double x = eta * q2;
            if (x > 46.0 || q2 == 0.0) continue;
            shortr += upper_gamma(nu, x) * std::exp(-lg_nu) * std::pow(q2, -nu);
        }
        table[j] = alpha * (shortr + four[j].real());
    }
    if (!shifted) table[0] = 0.0;
    return table;
}

} // namespace

std::vector<double> kernel_table(const Grid& grid, double s) {
    return kernel_table_impl(grid, s, Pt{0.0, 0.0, 0.0}, false);
}

std::vector<double> kernel_table(const Grid& grid, double s, const Pt& offset) {
    double o2 = 0.0;
    for (int i = 0; i < grid.dim(); ++i) {
        const double oi = std::abs(offset[i]);
        o2 += oi * oi;
        if (oi > 0.5 * grid.h(i) + 1e-12 * grid.torus().side(i))
            throw std::invalid_argument("kernel_table: offset exceeds half a cell");
    }
    if (o2 < 1e-24 * grid.torus().min_side() * grid.torus().min_side())
        throw std::invalid_argument("kernel_table: offset must be nonzero "
                                    "(the zero-offset table handles d = 0 separately)");
    return kernel_table_impl(grid, s, offset, true);
}

std::vector<ComparabilityRow> comparability_report(const FlatTorus& torus,
                                                   const KernelParams& params,
                                                   int rows, double lo, double hi) {
    if (rows < 2) throw std::invalid_argument("comparability_report: rows >= 2");
    std::vector<ComparabilityRow> out;
    out.reserve(rows);
    const double alpha = alpha_ns(torus.dim(), params.s);
    const Pt origin{0.0, 0.0, 0.0};
    for (int i = 0; i < rows; ++i) {
        const double frac = lo * std::pow(hi / lo, double(i) / (rows - 1));
        const double sep = frac * torus.min_side();
        Pt y{0.0, 0.0, 0.0};
        y[0] = sep;
        const double lat = ks_kernel(torus, origin, y, params, KsMethod::lattice_riesz);
        const double sub = ks_kernel(torus, origin, y, params, KsMethod::subordination);
        const double free_kernel = alpha * std::pow(sep, -(torus.dim() + params.s));
        out.push_back({sep, lat / free_kernel, std::abs(lat - sub) / lat});
    }
    return out;
}

} // namespace fractorus
