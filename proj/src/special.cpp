#include "fractorus/special.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace fractorus {

namespace {
constexpr double kPi = std::numbers::pi;

void check_s(double s) {
    if (!(s > 0.0) || !(s < 2.0)) throw std::invalid_argument("s must lie in (0,2)");
}
} // namespace

double alpha_ns(int n, double s) {
    check_s(s);
    if (n < 1 || n > 3) throw std::invalid_argument("alpha_ns: n must be 1..3");
    // |Gamma(-s/2)| = (2/s) Gamma(1-s/2) for s in (0,2).
    const double log_num = s * std::numbers::ln2 + std::lgamma(0.5 * (n + s));
    const double log_den = 0.5 * n * std::log(kPi) + std::log(2.0 / s) + std::lgamma(1.0 - 0.5 * s);
    return std::exp(log_num - log_den);
}

double beta_s(double s) {
    check_s(s);
    return std::exp(std::lgamma(1.0 - 0.5 * s) - (s - 1.0) * std::numbers::ln2 -
                    std::lgamma(0.5 * s));
}

double subordination_prefactor(double s) {
    check_s(s);
    return 0.5 * s * std::exp(-std::lgamma(1.0 - 0.5 * s));
}

double transverse_factor(int n, double s) {
    check_s(s);
    if (n < 1 || n > 3) throw std::invalid_argument("transverse_factor: n must be 1..3");
    if (n == 1) return 1.0;
    return std::exp(0.5 * (n - 1) * std::log(kPi) + std::lgamma(0.5 * (1.0 + s)) -
                    std::lgamma(0.5 * (n + s)));
}

namespace {

// Lower regularized series, valid for a > 0, x < a + 1.
double lower_gamma_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum * std::exp(-x + a * std::log(x));
}

// Lentz continued fraction for Gamma(a, x); reliable for x >= max(1, a+1).
double upper_gamma_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x)) * h;
}

} // namespace

double upper_gamma(double a, double x) {
    if (!(x > 0.0)) {
        if (x == 0.0 && a > 0.0) return std::tgamma(a);
        throw std::invalid_argument("upper_gamma: x must be positive");
    }
    if (a <= -1.0 || a > 3.0) throw std::invalid_argument("upper_gamma: a out of supported range");
    if (x >= std::max(1.0, a + 1.0)) return upper_gamma_cf(a, x);
    if (a > 0.0) return std::tgamma(a) - lower_gamma_series(a, x);
    // a in (-1, 0]: one step of Gamma(a,x) = (Gamma(a+1,x) - x^a e^{-x}) / a.
    if (a == 0.0) {
        // Gamma(0,x) = E_1(x); series for small x.
        const double euler = 0.57721566490153286060651209008240243;
        double sum = -euler - std::log(x);
        double term = 1.0;
        for (int k = 1; k < 200; ++k) {
            term *= -x / k;
            sum -= term / k;
            if (std::abs(term / k) < 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }
    const double up = upper_gamma(a + 1.0, x);
    return (up - std::exp(a * std::log(x) - x)) / a;
}

double trapezoid(const std::function<double(double)>& g, double lo, double hi, int npts) {
    if (npts < 2) throw std::invalid_argument("trapezoid: need at least 2 nodes");
    const double step = (hi - lo) / (npts - 1);
    double acc = 0.5 * (g(lo) + g(hi));
    for (int i = 1; i < npts - 1; ++i) acc += g(lo + i * step);
    return acc * step;
}

namespace {

double simpson(const std::function<double(double)>& g, double lo, double hi, int npts) {
    // npts odd
    const double step = (hi - lo) / (npts - 1);
    double acc = g(lo) + g(hi);
    for (int i = 1; i < npts - 1; ++i) acc += g(lo + i * step) * (i % 2 ? 4.0 : 2.0);
    return acc * step / 3.0;
}

// Hurwitz zeta(q, a) = sum_{k>=0} (a+k)^{-q} for q > 1, by Euler-Maclaurin.
double hurwitz_zeta(double q, double a) {
    const int head = 12;
    double acc = 0.0;
    for (int k = 0; k < head; ++k) acc += std::pow(a + k, -q);
    const double b = a + head;
    acc += std::pow(b, 1.0 - q) / (q - 1.0) + 0.5 * std::pow(b, -q);
    acc += q * std::pow(b, -q - 1.0) / 12.0;
    acc -= q * (q + 1.0) * (q + 2.0) * std::pow(b, -q - 3.0) / 720.0;
    return acc;
}

} // namespace

namespace {

// Integral of |z|^{2-n-s} over the cube [-R,R]^n.
double cube_moment_integral(int n, double s, double R) {
    if (n == 1) return 2.0 * std::pow(R, 2.0 - s) / (2.0 - s);
    if (n == 2) {
        // 8 int_0^{pi/4} (R/cos t)^{2-s}/(2-s) ... reduces to a smooth
        // angular quadrature of cos(t)^{s-2}.
        const auto g = [&](double t) { return std::pow(std::cos(t), s - 2.0); };
        const double ang = simpson(g, 0.0, kPi / 4.0, 2001);
        return 8.0 * std::pow(R, 2.0 - s) / (2.0 - s) * ang;
    }
    // n == 3: 6 faces, each parametrized over [-1,1]^2 (tensor Simpson).
    const int m = 201;
    long double acc = 0.0L;
    const double step = 2.0 / (m - 1);
    auto w1 = [&](int i) { return (i == 0 || i == m - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
    for (int i = 0; i < m; ++i) {
        const double x = -1.0 + i * step;
        for (int j = 0; j < m; ++j) {
            const double y = -1.0 + j * step;
            acc += w1(i) * w1(j) * std::pow(x * x + y * y + 1.0, -0.5 * (1.0 + s));
        }
    }
    acc *= (step / 3.0) * (step / 3.0);
    return 6.0 * std::pow(R, 2.0 - s) / (2.0 - s) * double(acc);
}

// Compensated difference D(J) = cube integral - lattice sum over the cube.
double defect_partial(int n, double s, int J) {
    const double R = J + 0.5;
    long double lattice = 0.0L;
    if (n == 1) {
        for (int j = 1; j <= J; ++j) lattice += std::pow(j, 2.0 - 1.0 - s);
        lattice *= 2.0L;
    } else if (n == 2) {
        for (int a = -J; a <= J; ++a)
            for (int b = -J; b <= J; ++b) {
                if (a == 0 && b == 0) continue;
                const double r2 = double(a) * a + double(b) * b;
                lattice += std::pow(r2, 0.5 * (2.0 - 2.0 - s));
            }
    } else {
        for (int a = -J; a <= J; ++a)
            for (int b = -J; b <= J; ++b)
                for (int c = -J; c <= J; ++c) {
                    if (a == 0 && b == 0 && c == 0) continue;
                    const double r2 = double(a) * a + double(b) * b + double(c) * c;
                    lattice += std::pow(r2, 0.5 * (2.0 - 3.0 - s));
                }
    }
    return cube_moment_integral(n, s, R) - double(lattice);
}

} // namespace

double lattice_defect_energy(int n, double s) {
    check_s(s);
    static std::map<std::pair<int, double>, double> cache;
    const auto key = std::make_pair(n, s);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    // D(J) = A + c J^{-s} + d J^{-1-s} + ...; solve for A from three J.
    const int J1 = (n == 3) ? 40 : 160;
    const int J2 = (n == 3) ? 60 : 240;
    const int J3 = (n == 3) ? 90 : 360;
    const double d1 = defect_partial(n, s, J1);
    const double d2 = defect_partial(n, s, J2);
    const double d3 = defect_partial(n, s, J3);
    const double p1 = std::pow(J1 + 0.5, -s), q1 = std::pow(J1 + 0.5, -1.0 - s);
    const double p2 = std::pow(J2 + 0.5, -s), q2 = std::pow(J2 + 0.5, -1.0 - s);
    const double p3 = std::pow(J3 + 0.5, -s), q3 = std::pow(J3 + 0.5, -1.0 - s);
    // Cramer solve of [1 p q][A c d]^T = D.
    const double det = (p2 * q3 - p3 * q2) - (p1 * q3 - p3 * q1) + (p1 * q2 - p2 * q1);
    const double detA = d1 * (p2 * q3 - p3 * q2) - d2 * (p1 * q3 - p3 * q1) +
                        d3 * (p1 * q2 - p2 * q1);
    const double A = detA / det;
    const double value = alpha_ns(n, s) / n * A;
    cache[key] = value;
    return value;
}

double interface_defect_1d(double s) {
    check_s(s);
    static std::map<double, double> cache;
    auto it = cache.find(s);
    if (it != cache.end()) return it->second;

    // Exact integral of |x-y|^{-1-s} over unit cells at centre distance
    // m = g+1 minus its midpoint value m^{-1-s}, weighted by the pair
    // multiplicity m. Small m exactly via second differences of t^{1-s};
    // large m via the asymptotic cell-pair expansion
    //   I - f = f''/12 + f''''/360 + O(m^{-7-s})
    // summed in closed form with Hurwitz zeta (second differences cancel
    // catastrophically there).
    const auto G = [&](double t) { return std::pow(t, 1.0 - s); };
    const double inv = 1.0 / (s * (1.0 - s));
    double sum = 0.0;
    const int gsw = 40;
    for (int g = 0; g < gsw; ++g) {
        const double exact = (2.0 * G(g + 1.0) - G(double(g)) - G(g + 2.0)) * inv;
        sum += (g + 1.0) * (exact - std::pow(g + 1.0, -1.0 - s));
    }
    const double c2 = (1.0 + s) * (2.0 + s) / 12.0;
    const double c4 = (1.0 + s) * (2.0 + s) * (3.0 + s) * (4.0 + s) / 360.0;
    sum += c2 * hurwitz_zeta(2.0 + s, gsw + 1.0);
    sum += c4 * hurwitz_zeta(4.0 + s, gsw + 1.0);
    cache[s] = sum;
    return sum;
}

} // namespace fractorus
