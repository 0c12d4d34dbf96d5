#include "fractorus/torus.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fractorus {

FlatTorus::FlatTorus(int dim, std::array<double, 3> sides) : dim_(dim), sides_(sides) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("FlatTorus: dim must be 1..3");
    vol_ = 1.0;
    min_side_ = 0.0;
    for (int i = 0; i < dim_; ++i) {
        if (!(sides_[i] > 0.0)) throw std::invalid_argument("FlatTorus: sides must be positive");
        vol_ *= sides_[i];
        min_side_ = (i == 0) ? sides_[i] : std::min(min_side_, sides_[i]);
    }
    for (int i = dim_; i < 3; ++i) sides_[i] = 0.0;
}

double FlatTorus::min_image(double diff, int i) const {
    const double L = sides_[i];
    double d = std::remainder(diff, L); // in [-L/2, L/2]
    if (d <= -0.5 * L) d += L;          // normalize to (-L/2, L/2]
    return d;
}

double FlatTorus::geodesic_distance(const Pt& p, const Pt& q) const {
    double acc = 0.0;
    for (int i = 0; i < dim_; ++i) {
        const double d = min_image(q[i] - p[i], i);
        acc += d * d;
    }
    return std::sqrt(acc);
}

Pt FlatTorus::wrap(Pt p) const {
    for (int i = 0; i < dim_; ++i) {
        const double L = sides_[i];
        double x = std::fmod(p[i], L);
        if (x < 0.0) x += L;
        if (x >= L) x = 0.0; // guard against fmod edge rounding
        p[i] = x;
    }
    return p;
}

Grid::Grid(FlatTorus torus, GridSpec spec) : torus_(torus), spec_(spec) {
    size_ = 1;
    for (int i = 0; i < torus_.dim(); ++i) {
        const int N = spec_.npts[i];
        if (N < 4 || (N % 2) != 0)
            throw std::invalid_argument("Grid: points per axis must be even and >= 4");
        size_ *= static_cast<std::size_t>(N);
    }
    for (int i = torus_.dim(); i < 3; ++i) spec_.npts[i] = 1;
    weight_ = torus_.volume() / static_cast<double>(size_);
}

double Grid::max_h() const {
    double m = 0.0;
    for (int i = 0; i < dim(); ++i) m = std::max(m, h(i));
    return m;
}

std::vector<int> Grid::dims_vec() const {
    std::vector<int> d(dim());
    for (int i = 0; i < dim(); ++i) d[i] = spec_.npts[i];
    return d;
}

std::array<int, 3> Grid::unflatten(std::size_t idx) const {
    std::array<int, 3> m{0, 0, 0};
    for (int i = dim() - 1; i >= 0; --i) {
        const int N = spec_.npts[i];
        m[i] = static_cast<int>(idx % N);
        idx /= N;
    }
    return m;
}

std::size_t Grid::flatten(const std::array<int, 3>& m) const {
    std::size_t idx = 0;
    for (int i = 0; i < dim(); ++i) idx = idx * spec_.npts[i] + m[i];
    return idx;
}

std::size_t Grid::wrap_flatten(std::array<int, 3> m) const {
    for (int i = 0; i < dim(); ++i) {
        int N = spec_.npts[i];
        int j = m[i] % N;
        if (j < 0) j += N;
        m[i] = j;
    }
    return flatten(m);
}

Pt Grid::point(std::size_t idx) const {
    const auto m = unflatten(idx);
    Pt p{0, 0, 0};
    for (int i = 0; i < dim(); ++i) p[i] = m[i] * h(i);
    return p;
}

int Grid::freq(int j, int i) const {
    const int N = spec_.npts[i];
    return (j <= N / 2) ? j : j - N;
}

double Grid::lambda(std::size_t idx) const {
    const auto m = unflatten(idx);
    double acc = 0.0;
    for (int i = 0; i < dim(); ++i) {
        const double w = 2.0 * std::numbers::pi * freq(m[i], i) / torus_.side(i);
        acc += w * w;
    }
    return acc;
}

std::vector<std::uint8_t> Grid::ball_mask(const Pt& center, double radius) const {
    std::vector<std::uint8_t> mask(size_, 0);
    for (std::size_t idx = 0; idx < size_; ++idx)
        mask[idx] = torus_.geodesic_distance(point(idx), center) < radius ? 1 : 0;
    return mask;
}

bool Grid::same_layout(const Grid& o) const {
    if (dim() != o.dim()) return false;
    for (int i = 0; i < dim(); ++i)
        if (npts(i) != o.npts(i) || torus_.side(i) != o.torus_.side(i)) return false;
    return true;
}

GridField::GridField(Grid g, double fill) : grid(g), v(g.size(), fill) {}

SpectralField::SpectralField(Grid g) : grid(g), c(g.size()) {}

} // namespace fractorus
