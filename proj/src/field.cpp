#include "fractorus/fft.hpp"
#include "fractorus/torus.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace fractorus {

SpectralField to_spectral(const GridField& u) {
    const Grid& g = u.grid;
    SpectralField su(g);
    std::vector<std::complex<double>> buf(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] = u.v[i];
    fft_for(g.dims_vec()).forward(buf.data(), su.c.data());
    const double scale = std::sqrt(g.torus().volume()) / static_cast<double>(g.size());
    for (auto& z : su.c) z *= scale;
    return su;
}

GridField to_physical(const SpectralField& su) {
    const Grid& g = su.grid;
    std::vector<std::complex<double>> buf(g.size());
    fft_for(g.dims_vec()).backward(su.c.data(), buf.data());
    GridField u(g);
    const double scale = 1.0 / std::sqrt(g.torus().volume());
    for (std::size_t i = 0; i < g.size(); ++i) u.v[i] = buf[i].real() * scale;
    return u;
}

double inner(const GridField& a, const GridField& b) {
    if (!a.grid.same_layout(b.grid)) throw std::invalid_argument("inner: grid mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.v[i] * b.v[i];
    return acc * a.grid.weight();
}

double norm_l2(const GridField& a) { return std::sqrt(inner(a, a)); }

double norm_sup(const GridField& a) {
    double m = 0.0;
    for (double x : a.v) m = std::max(m, std::abs(x));
    return m;
}

double integral(const GridField& a) {
    double acc = 0.0;
    for (double x : a.v) acc += x;
    return acc * a.grid.weight();
}

GridField gradient_axis(const GridField& u, int axis) {
    const Grid& g = u.grid;
    if (axis < 0 || axis >= g.dim()) throw std::invalid_argument("gradient_axis: bad axis");
    SpectralField su = to_spectral(u);
    const int N = g.npts(axis);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const auto m = g.unflatten(idx);
        int k = g.freq(m[axis], axis);
        if (2 * std::abs(k) == N) k = 0; // odd derivative drops the Nyquist mode
        const double w = 2.0 * std::numbers::pi * k / g.torus().side(axis);
        su.c[idx] *= std::complex<double>(0.0, w);
    }
    return to_physical(su);
}

GridField gradient_sq(const GridField& u) {
    GridField out(u.grid, 0.0);
    for (int ax = 0; ax < u.grid.dim(); ++ax) {
        GridField d = gradient_axis(u, ax);
        for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += d.v[i] * d.v[i];
    }
    return out;
}

namespace {

nlohmann::json grid_header(const Grid& g) {
    nlohmann::json h;
    h["dim"] = g.dim();
    std::vector<double> sides;
    std::vector<int> npts;
    for (int i = 0; i < g.dim(); ++i) {
        sides.push_back(g.torus().side(i));
        npts.push_back(g.npts(i));
    }
    h["side_lengths"] = sides;
    h["points_per_axis"] = npts;
    return h;
}

} // namespace

void save_field(const GridField& u, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_field: cannot open " + path);
    const std::string header = grid_header(u.grid).dump();
    const std::uint64_t hlen = header.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(u.v.data()),
              static_cast<std::streamsize>(u.v.size() * sizeof(double)));
    if (!out) throw std::runtime_error("save_field: write failed for " + path);
}

GridField load_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_field: cannot open " + path);
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    if (!in || hlen == 0 || hlen > (1u << 20)) throw std::runtime_error("load_field: bad header");
    std::string header(hlen, '\0');
    in.read(header.data(), static_cast<std::streamsize>(hlen));
    const auto h = nlohmann::json::parse(header);
    const int dim = h.at("dim").get<int>();
    const auto sides = h.at("side_lengths").get<std::vector<double>>();
    const auto npts = h.at("points_per_axis").get<std::vector<int>>();
    if (static_cast<int>(sides.size()) != dim || static_cast<int>(npts.size()) != dim)
        throw std::runtime_error("load_field: inconsistent header");
    std::array<double, 3> L{0, 0, 0};
    std::array<int, 3> N{0, 0, 0};
    for (int i = 0; i < dim; ++i) {
        L[i] = sides[i];
        N[i] = npts[i];
    }
    Grid g(FlatTorus(dim, L), GridSpec{N});
    GridField u(g);
    in.read(reinterpret_cast<char*>(u.v.data()),
            static_cast<std::streamsize>(u.v.size() * sizeof(double)));
    if (!in) throw std::runtime_error("load_field: truncated data");
    return u;
}

void export_csv(const GridField& u, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("export_csv: cannot open " + path);
    const Grid& g = u.grid;
    for (int i = 0; i < g.dim(); ++i) std::fprintf(f, "i%d,", i);
    for (int i = 0; i < g.dim(); ++i) std::fprintf(f, "x%d,", i);
    std::fprintf(f, "value\n");
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const auto m = g.unflatten(idx);
        const Pt p = g.point(idx);
        for (int i = 0; i < g.dim(); ++i) std::fprintf(f, "%d,", m[i]);
        for (int i = 0; i < g.dim(); ++i) std::fprintf(f, "%.17g,", p[i]);
        std::fprintf(f, "%.17g\n", u.v[idx]);
    }
    std::fclose(f);
}

} // namespace fractorus
