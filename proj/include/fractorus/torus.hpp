#pragma once

// Flat tori T = R^n / (L_1 Z x ... x L_n Z), n = 1..3, with uniform
// periodic grids and Fourier transforms normalized against the
// orthonormal eigenbasis phi_k = exp(2 pi i k.x/L) / sqrt(vol).
//
// Grid points sit at x_i = j * L_i / N_i (coordinates in [0, L_i)),
// each carrying the midpoint quadrature weight vol / prod(N_i).
// Spectral coefficients are u_hat[k] = <u, phi_k>, so Parseval reads
// sum_x u(x)^2 w = sum_k |u_hat[k]|^2.

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace fractorus {

using Pt = std::array<double, 3>; // only the first dim entries are meaningful

class FlatTorus {
public:
    FlatTorus(int dim, std::array<double, 3> sides);

    int dim() const { return dim_; }
    double side(int i) const { return sides_[i]; }
    double volume() const { return vol_; }
    double min_side() const { return min_side_; }

    // Component of the shortest displacement y - x along axis i, in
    // (-L_i/2, L_i/2].
    double min_image(double diff, int i) const;

    // Length of the shortest geodesic between p and q.
    double geodesic_distance(const Pt& p, const Pt& q) const;

    // Wrap a point into the fundamental domain [0,L_1) x ... x [0,L_n).
    Pt wrap(Pt p) const;

private:
    int dim_;
    std::array<double, 3> sides_;
    double vol_;
    double min_side_;
};

struct GridSpec {
    std::array<int, 3> npts{0, 0, 0}; // points per axis; each must be even and >= 4
};

// Torus + grid resolution; value type shared by fields.
class Grid {
public:
    Grid(FlatTorus torus, GridSpec spec);

    const FlatTorus& torus() const { return torus_; }
    int dim() const { return torus_.dim(); }
    int npts(int i) const { return spec_.npts[i]; }
    std::size_t size() const { return size_; }
    double h(int i) const { return torus_.side(i) / spec_.npts[i]; }
    double max_h() const;
    double weight() const { return weight_; } // vol / prod N_i

    std::vector<int> dims_vec() const; // for FFT planning

    // Flat index <-> multi-index (row major, axis 0 slowest).
    std::array<int, 3> unflatten(std::size_t idx) const;
    std::size_t flatten(const std::array<int, 3>& m) const;
    std::size_t wrap_flatten(std::array<int, 3> m) const; // indices taken mod N

    Pt point(std::size_t idx) const;

    // Signed integer frequency along axis i for FFT slot j (Nyquist kept
    // as +N/2).
    int freq(int j, int i) const;
    // Laplace-Beltrami eigenvalue lambda_k = sum_i (2 pi k_i / L_i)^2 for
    // the mode living in FFT slot idx.
    double lambda(std::size_t idx) const;

    // Grid points with geodesic_distance(point, center) < radius.
    std::vector<std::uint8_t> ball_mask(const Pt& center, double radius) const;

    bool same_layout(const Grid& o) const;

private:
    FlatTorus torus_;
    GridSpec spec_;
    std::size_t size_;
    double weight_;
};

struct GridField {
    GridField() = default;
    GridField(Grid g, double fill = 0.0);
    Grid grid{FlatTorus(1, {1, 0, 0}), GridSpec{{4, 0, 0}}};
    std::vector<double> v;

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    std::size_t size() const { return v.size(); }
};

struct SpectralField {
    SpectralField() = default;
    SpectralField(Grid g);
    Grid grid{FlatTorus(1, {1, 0, 0}), GridSpec{{4, 0, 0}}};
    std::vector<std::complex<double>> c;
    std::size_t size() const { return c.size(); }
};

SpectralField to_spectral(const GridField& u);
GridField to_physical(const SpectralField& su);

// L2 inner product / norms under the grid quadrature weight.
double inner(const GridField& a, const GridField& b);
double norm_l2(const GridField& a);
double norm_sup(const GridField& a);
double integral(const GridField& a);

// Spectral gradient along one axis (odd derivative: Nyquist zeroed).
GridField gradient_axis(const GridField& u, int axis);
// |grad u|^2 pointwise.
GridField gradient_sq(const GridField& u);

// Binary format: u64 header length, JSON header
// {dim, side_lengths, points_per_axis}, then row-major 64-bit LE floats.
void save_field(const GridField& u, const std::string& path);
GridField load_field(const std::string& path);
// CSV export: one row per point, columns i0[,i1[,i2]],x0[,x1[,x2]],value.
void export_csv(const GridField& u, const std::string& path);

} // namespace fractorus
