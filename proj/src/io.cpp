#include "fractorus/io.hpp"

#include "fractorus/allen_cahn.hpp"
#include "fractorus/extension.hpp"
#include "fractorus/fractional.hpp"
#include "fractorus/kernel.hpp"
#include "fractorus/minmax.hpp"
#include "fractorus/perimeter.hpp"
#include "fractorus/rng.hpp"
#include "fractorus/special.hpp"
#include "fractorus/torus.hpp"

#include "json.hpp"

#include <Eigen/Core>
#include <fftw3.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

// The driver behind the fractorus binary. One JSON config describes one
// run: a subcommand plus the blocks it references (torus, grid, kernel,
// ac, experiment). Validation is strict in both directions: referenced
// fields must be present and well formed, and keys the command does not
// read are rejected rather than ignored, so a typo can never silently
// fall back to a default. Execution computes first and writes artifacts
// at the end, except for the flagged paths (a non-converged flow, a
// non-converged eps-limit row) which write their flagged artifacts and
// then raise NumericalError; run_cli records either outcome in the
// manifest, so no artifact ever appears without provenance.

namespace fractorus {
namespace {

using nlohmann::json;

constexpr const char* kVersion = "1.0.0";

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------- schema

const json& member(const json& obj, const std::string& where, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) bad(where, std::string("missing key '") + key + "'");
    return *it;
}

void expect_object(const json& v, const std::string& where) {
    if (!v.is_object()) bad(where, "expected an object");
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known) bad(where, "unknown key '" + item.key() + "'");
    }
}

double num_at(const json& obj, const std::string& where, const char* key) {
    const json& v = member(obj, where, key);
    if (!v.is_number()) bad(where, std::string("'") + key + "' must be a number");
    return v.get<double>();
}

double num_or(const json& obj, const std::string& where, const char* key, double dflt) {
    return obj.contains(key) ? num_at(obj, where, key) : dflt;
}

int int_at(const json& obj, const std::string& where, const char* key) {
    const json& v = member(obj, where, key);
    if (!v.is_number_integer()) bad(where, std::string("'") + key + "' must be an integer");
    return v.get<int>();
}

int int_or(const json& obj, const std::string& where, const char* key, int dflt) {
    return obj.contains(key) ? int_at(obj, where, key) : dflt;
}

std::string str_at(const json& obj, const std::string& where, const char* key) {
    const json& v = member(obj, where, key);
    if (!v.is_string()) bad(where, std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

std::uint64_t u64_at(const json& obj, const std::string& where, const char* key) {
    const json& v = member(obj, where, key);
    if (!(v.is_number_unsigned() ||
          (v.is_number_integer() && v.get<std::int64_t>() >= 0)))
        bad(where, std::string("'") + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::vector<double> num_list(const json& v, const std::string& where, const char* key) {
    if (!v.is_array() || v.empty())
        bad(where, std::string("'") + key + "' must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number())
            bad(where, std::string("'") + key + "' must be a non-empty array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<int> int_list(const json& v, const std::string& where, const char* key) {
    if (!v.is_array() || v.empty())
        bad(where, std::string("'") + key + "' must be a non-empty array of integers");
    std::vector<int> out;
    for (const auto& e : v) {
        if (!e.is_number_integer())
            bad(where, std::string("'") + key + "' must be a non-empty array of integers");
        out.push_back(e.get<int>());
    }
    return out;
}

// -------------------------------------------------------- common blocks

struct RunConfig {
    std::string command;
    std::optional<FlatTorus> torus;
    std::optional<Grid> grid;
    KernelParams kernel; // kernel.s is the exponent for perimeter-side commands
    ACParams ac;
    json experiment; // defaults resolved during validation
    std::uint64_t seed = 0;
    std::string output_dir;
    int threads = 1;
    json echo; // input config with the resolved seed
};

FlatTorus parse_torus(const json& root) {
    const json& t = member(root, "config", "torus");
    expect_object(t, "torus");
    reject_unknown(t, "torus", {"dim", "side_lengths"});
    const int dim = int_at(t, "torus", "dim");
    if (dim < 1 || dim > 3) bad("torus", "'dim' must be 1, 2, or 3");
    const auto sides = num_list(member(t, "torus", "side_lengths"), "torus", "side_lengths");
    if (static_cast<int>(sides.size()) != dim)
        bad("torus", "'side_lengths' must list exactly dim entries");
    std::array<double, 3> arr{0.0, 0.0, 0.0};
    for (int i = 0; i < dim; ++i) {
        if (!(sides[i] > 0.0)) bad("torus", "'side_lengths' must be positive");
        arr[i] = sides[i];
    }
    return FlatTorus(dim, arr);
}

Grid parse_grid(const json& root, const FlatTorus& torus) {
    const json& gj = member(root, "config", "grid");
    expect_object(gj, "grid");
    reject_unknown(gj, "grid", {"points_per_axis"});
    const json& pts = member(gj, "grid", "points_per_axis");
    std::array<int, 3> n{0, 0, 0};
    if (pts.is_number_integer()) {
        for (int i = 0; i < torus.dim(); ++i) n[i] = pts.get<int>();
    } else {
        const auto lst = int_list(pts, "grid", "points_per_axis");
        if (static_cast<int>(lst.size()) != torus.dim())
            bad("grid", "'points_per_axis' must be one integer or one per axis");
        for (int i = 0; i < torus.dim(); ++i) n[i] = lst[i];
    }
    for (int i = 0; i < torus.dim(); ++i)
        if (n[i] < 4 || n[i] % 2 != 0)
            bad("grid", "'points_per_axis' entries must be even and >= 4");
    return Grid(torus, GridSpec{n});
}

KernelParams parse_kernel(const json& root) {
    const json& kj = member(root, "config", "kernel");
    expect_object(kj, "kernel");
    reject_unknown(kj, "kernel", {"s", "m_max", "spectral_tol", "quad_pts_per_unit"});
    KernelParams p;
    p.s = num_at(kj, "kernel", "s");
    if (!(p.s > 0.0 && p.s < 1.0)) bad("kernel", "'s' must lie in (0, 1)");
    p.m_max = int_or(kj, "kernel", "m_max", p.m_max);
    if (p.m_max < 1) bad("kernel", "'m_max' must be >= 1");
    p.spectral_tol = num_or(kj, "kernel", "spectral_tol", p.spectral_tol);
    if (!(p.spectral_tol > 0.0)) bad("kernel", "'spectral_tol' must be positive");
    p.quad_pts_per_unit = int_or(kj, "kernel", "quad_pts_per_unit", p.quad_pts_per_unit);
    if (p.quad_pts_per_unit < 2) bad("kernel", "'quad_pts_per_unit' must be >= 2");
    return p;
}

ACParams parse_ac(const json& root, bool flow_keys) {
    const json& aj = member(root, "config", "ac");
    expect_object(aj, "ac");
    ACParams p;
    if (!flow_keys) {
        // layer1d only reads the exponent; everything else is rejected so
        // a config cannot pretend the flow parameters matter there
        reject_unknown(aj, "ac", {"s"});
        p.s = num_at(aj, "ac", "s");
        if (!(p.s > 0.0 && p.s < 1.0)) bad("ac", "'s' must lie in (0, 1)");
        return p;
    }
    reject_unknown(aj, "ac", {"s", "epsilon", "flow_dt", "tol_residual", "max_iters"});
    p.s = num_at(aj, "ac", "s");
    if (!(p.s > 0.0 && p.s < 1.0)) bad("ac", "'s' must lie in (0, 1)");
    p.epsilon = num_at(aj, "ac", "epsilon");
    if (!(p.epsilon > 0.0)) bad("ac", "'epsilon' must be positive");
    p.flow_dt = num_or(aj, "ac", "flow_dt", p.flow_dt);
    if (!(p.flow_dt > 0.0)) bad("ac", "'flow_dt' must be positive");
    p.tol_residual = num_or(aj, "ac", "tol_residual", p.tol_residual);
    if (!(p.tol_residual > 0.0)) bad("ac", "'tol_residual' must be positive");
    p.max_iters = int_or(aj, "ac", "max_iters", p.max_iters);
    if (p.max_iters < 1) bad("ac", "'max_iters' must be >= 1");
    return p;
}

Pt parse_point(const json& v, int dim, const std::string& where, const char* key) {
    const auto lst = num_list(v, where, key);
    if (static_cast<int>(lst.size()) != dim)
        bad(where, std::string("'") + key + "' must list exactly dim coordinates");
    Pt p{0.0, 0.0, 0.0};
    for (int i = 0; i < dim; ++i) p[i] = lst[i];
    return p;
}

// ------------------------------------------------------------ field spec

// {"kind": "constant"|"mode"|"random"|"stripe"|"ball"|"file", ...}; used
// for initial data, probe fields, and seminorm inputs.
json check_fieldspec(const json& f, const Grid& g, const std::string& where) {
    expect_object(f, where);
    const std::string kind = str_at(f, where, "kind");
    json norm = f;
    if (kind == "constant") {
        reject_unknown(f, where, {"kind", "value"});
        (void)num_at(f, where, "value");
    } else if (kind == "mode") {
        reject_unknown(f, where, {"kind", "k", "amplitude", "phase"});
        const auto k = int_list(member(f, where, "k"), where, "k");
        if (static_cast<int>(k.size()) != g.dim())
            bad(where, "'k' must list exactly dim integer frequencies");
        norm["amplitude"] = num_or(f, where, "amplitude", 1.0);
        norm["phase"] = num_or(f, where, "phase", 0.0);
    } else if (kind == "random") {
        reject_unknown(f, where, {"kind", "amplitude", "max_mode"});
        norm["amplitude"] = num_or(f, where, "amplitude", 0.5);
        const int mm = int_or(f, where, "max_mode", 3);
        if (mm < 1 || mm > 16) bad(where, "'max_mode' must lie in [1, 16]");
        norm["max_mode"] = mm;
    } else if (kind == "stripe") {
        reject_unknown(f, where, {"kind", "axis", "a", "b", "mollify"});
        const int axis = int_or(f, where, "axis", 0);
        if (axis < 0 || axis >= g.dim()) bad(where, "'axis' out of range");
        const double a = num_at(f, where, "a");
        const double b = num_at(f, where, "b");
        if (!(a < b)) bad(where, "stripe needs a < b");
        if (!(b - a < g.torus().side(axis)))
            bad(where, "stripe width must stay below the side length");
        const double mol = num_or(f, where, "mollify", 0.0);
        if (mol < 0.0) bad(where, "'mollify' must be >= 0");
        norm["axis"] = axis;
        norm["mollify"] = mol;
    } else if (kind == "ball") {
        reject_unknown(f, where, {"kind", "center", "radius", "mollify"});
        (void)parse_point(member(f, where, "center"), g.dim(), where, "center");
        const double r = num_at(f, where, "radius");
        if (!(r > 0.0 && r < 0.5 * g.torus().min_side()))
            bad(where, "'radius' must lie in (0, min_side/2)");
        const double mol = num_or(f, where, "mollify", 0.0);
        if (mol < 0.0) bad(where, "'mollify' must be >= 0");
        norm["mollify"] = mol;
    } else if (kind == "file") {
        reject_unknown(f, where, {"kind", "path"});
        const std::string path = str_at(f, where, "path");
        if (!std::filesystem::exists(path)) bad(where, "field file '" + path + "' not found");
    } else {
        bad(where, "unknown field kind '" + kind + "'");
    }
    return norm;
}

// Gaussian mollifier at scale eps applied spectrally, then clamped back
// into [-1, 1] (the mollified indicator overshoots by Gibbs ripple).
GridField mollify(const GridField& u, double eps) {
    if (!(eps > 0.0)) return u;
    SpectralField sf = to_spectral(u);
    for (std::size_t i = 0; i < sf.size(); ++i)
        sf.c[i] *= std::exp(-u.grid.lambda(i) * eps * eps / 8.0);
    GridField out = to_physical(sf);
    for (auto& v : out.v) v = std::clamp(v, -1.0, 1.0);
    return out;
}

// Low-mode random field: Gaussian coefficients on |k_i| <= max_mode with
// 1/(1+|k|^2) decay, deterministic in the seed.
GridField random_field(const Grid& g, double amplitude, int max_mode, std::uint64_t seed) {
    Rng rng(seed);
    GridField u(g, 0.0);
    const int n = g.dim();
    std::array<int, 3> k{0, 0, 0};
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int i = 0; i < n; ++i) {
        lo[i] = -max_mode;
        hi[i] = max_mode;
    }
    for (k[0] = lo[0]; k[0] <= hi[0]; ++k[0])
        for (k[1] = lo[1]; k[1] <= hi[1]; ++k[1])
            for (k[2] = lo[2]; k[2] <= hi[2]; ++k[2]) {
                double k2 = 0.0;
                for (int i = 0; i < n; ++i) k2 += double(k[i]) * k[i];
                if (k2 == 0.0) continue;
                const double cr = rng.normal();
                const double ci = rng.normal();
                const double decay = amplitude / (1.0 + k2);
                for (std::size_t idx = 0; idx < g.size(); ++idx) {
                    const Pt x = g.point(idx);
                    double phase = 0.0;
                    for (int i = 0; i < n; ++i)
                        phase += 2.0 * std::numbers::pi * k[i] * x[i] / g.torus().side(i);
                    u[idx] += decay * (cr * std::cos(phase) + ci * std::sin(phase));
                }
            }
    return u;
}

GridField build_field(const json& f, const Grid& g, std::uint64_t seed) {
    const std::string kind = f.at("kind").get<std::string>();
    if (kind == "constant") {
        return GridField(g, f.at("value").get<double>());
    }
    if (kind == "mode") {
        const auto k = f.at("k").get<std::vector<int>>();
        const double amp = f.at("amplitude").get<double>();
        const double ph = f.at("phase").get<double>();
        GridField u(g);
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            const Pt x = g.point(idx);
            double phase = ph;
            for (int i = 0; i < g.dim(); ++i)
                phase += 2.0 * std::numbers::pi * k[i] * x[i] / g.torus().side(i);
            u[idx] = amp * std::cos(phase);
        }
        return u;
    }
    if (kind == "random")
        return random_field(g, f.at("amplitude").get<double>(),
                            f.at("max_mode").get<int>(), seed);
    if (kind == "stripe") {
        const SetIndicator e =
            make_stripe(g, f.at("axis").get<int>(), f.at("a").get<double>(),
                        f.at("b").get<double>());
        return mollify(e.field, f.at("mollify").get<double>());
    }
    if (kind == "ball") {
        const auto c = f.at("center").get<std::vector<double>>();
        Pt center{0.0, 0.0, 0.0};
        for (int i = 0; i < g.dim(); ++i) center[i] = c[i];
        const SetIndicator e = make_ball(g, center, f.at("radius").get<double>());
        return mollify(e.field, f.at("mollify").get<double>());
    }
    // kind == "file"
    GridField u = load_field(f.at("path").get<std::string>());
    if (!u.grid.same_layout(g))
        throw ConfigError("field: file '" + f.at("path").get<std::string>() +
                          "' does not match the configured grid");
    return u;
}

// ------------------------------------------------------------ shape spec

json check_shapespec(const json& sj, const Grid& g, const std::string& where) {
    expect_object(sj, where);
    const std::string kind = str_at(sj, where, "kind");
    json norm = sj;
    if (kind == "stripe") {
        reject_unknown(sj, where, {"kind", "axis", "a", "b"});
        const int axis = int_or(sj, where, "axis", 0);
        if (axis < 0 || axis >= g.dim()) bad(where, "'axis' out of range");
        const double a = num_at(sj, where, "a");
        const double b = num_at(sj, where, "b");
        if (!(a < b)) bad(where, "stripe needs a < b");
        if (!(b - a < g.torus().side(axis)))
            bad(where, "stripe width must stay below the side length");
        norm["axis"] = axis;
    } else if (kind == "ball") {
        reject_unknown(sj, where, {"kind", "center", "radius"});
        (void)parse_point(member(sj, where, "center"), g.dim(), where, "center");
        const double r = num_at(sj, where, "radius");
        if (!(r > 0.0 && r < 0.5 * g.torus().min_side()))
            bad(where, "'radius' must lie in (0, min_side/2)");
    } else {
        bad(where, "unknown shape kind '" + kind + "'");
    }
    return norm;
}

SetIndicator build_shape(const json& sj, const Grid& g) {
    const std::string kind = sj.at("kind").get<std::string>();
    if (kind == "stripe")
        return make_stripe(g, sj.at("axis").get<int>(), sj.at("a").get<double>(),
                           sj.at("b").get<double>());
    const auto c = sj.at("center").get<std::vector<double>>();
    Pt center{0.0, 0.0, 0.0};
    for (int i = 0; i < g.dim(); ++i) center[i] = c[i];
    return make_ball(g, center, sj.at("radius").get<double>());
}

// ------------------------------------------------------------- artifacts

struct RunDir {
    std::filesystem::path root;
    std::vector<std::string> written;

    explicit RunDir(const std::string& dir) : root(dir) {
        std::error_code ec;
        std::filesystem::create_directories(root, ec);
        if (ec) throw ConfigError("output_dir '" + dir + "': " + ec.message());
    }

    void write_text(const std::string& name, const std::string& body) {
        std::ofstream out(root / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write artifact '" + name + "'");
        out << body;
        written.push_back(name);
    }

    void write_json(const std::string& name, const json& j) {
        write_text(name, j.dump(2) + "\n");
    }

    // reserves fields/<name> and returns the full path for save_field
    std::string field_path(const std::string& name) {
        std::error_code ec;
        std::filesystem::create_directories(root / "fields", ec);
        if (ec) throw std::runtime_error("cannot create fields/: " + ec.message());
        written.push_back("fields/" + name);
        return (root / "fields" / name).string();
    }
};

std::string versions_fftw() { return fftw_version; }

json versions_block() {
    return json{{"fractorus", kVersion},
                {"compiler", __VERSION__},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                              std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"fftw", versions_fftw()}};
}

void write_manifest(RunDir& dir, const RunConfig& cfg, double wall_seconds,
                    const std::string& status) {
    json m;
    m["command"] = cfg.command;
    m["config"] = cfg.echo;
    m["seed"] = cfg.seed;
    m["threads"] = cfg.threads;
    m["versions"] = versions_block();
    m["wall_time_seconds"] = wall_seconds;
    m["status"] = status;
    m["artifacts"] = dir.written;
    std::ofstream out(dir.root / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest.json");
    out << m.dump(2) << "\n";
}

// --------------------------------------------------------- kernel-check

void validate_kernel_check(RunConfig& cfg, const json& root) {
    reject_unknown(root, "config",
                   {"command", "torus", "kernel", "experiment", "seed", "output_dir"});
    cfg.torus = parse_torus(root);
    cfg.kernel = parse_kernel(root);
    json e = root.contains("experiment") ? root.at("experiment") : json::object();
    expect_object(e, "experiment");
    reject_unknown(e, "experiment",
                   {"t_lo", "t_hi", "t_count", "sep_lo", "sep_hi", "sep_count"});
    const double t_lo = num_or(e, "experiment", "t_lo", 1e-3);
    const double t_hi = num_or(e, "experiment", "t_hi", 10.0);
    const int t_count = int_or(e, "experiment", "t_count", 20);
    if (!(t_lo > 0.0 && t_hi > t_lo)) bad("experiment", "need 0 < t_lo < t_hi");
    if (t_count < 2) bad("experiment", "'t_count' must be >= 2");
    const double sep_lo = num_or(e, "experiment", "sep_lo", 0.05);
    const double sep_hi = num_or(e, "experiment", "sep_hi", 0.5);
    const int sep_count = int_or(e, "experiment", "sep_count", 10);
    if (!(sep_lo > 0.0 && sep_hi > sep_lo && sep_hi <= 0.5))
        bad("experiment", "need 0 < sep_lo < sep_hi <= 0.5 (fractions of min side)");
    if (sep_count < 2) bad("experiment", "'sep_count' must be >= 2");
    cfg.experiment = json{{"t_lo", t_lo},       {"t_hi", t_hi},
                          {"t_count", t_count}, {"sep_lo", sep_lo},
                          {"sep_hi", sep_hi},   {"sep_count", sep_count}};
}

void run_kernel_check(const RunConfig& cfg, RunDir& dir) {
    const FlatTorus& torus = *cfg.torus;
    const json& e = cfg.experiment;
    const double t_lo = e.at("t_lo").get<double>();
    const double t_hi = e.at("t_hi").get<double>();
    const int t_count = e.at("t_count").get<int>();

    // generic evaluation points, clear of symmetry axes
    Pt x{0.0, 0.0, 0.0}, y{0.0, 0.0, 0.0};
    for (int i = 0; i < torus.dim(); ++i) x[i] = 0.31 * torus.side(i);

    std::string heat = "t,spectral,lattice,rel_gap\n";
    for (int i = 0; i < t_count; ++i) {
        const double t =
            t_lo * std::pow(t_hi / t_lo, double(i) / double(t_count - 1));
        const double sp = heat_kernel(torus, x, y, t, HeatMethod::spectral, cfg.kernel);
        const double la = heat_kernel(torus, x, y, t, HeatMethod::lattice, cfg.kernel);
        const double gap = std::abs(sp - la) / std::max(std::abs(sp), 1e-300);
        heat += g17(t) + "," + g17(sp) + "," + g17(la) + "," + g17(gap) + "\n";
    }

    const auto rows = comparability_report(torus, cfg.kernel,
                                           e.at("sep_count").get<int>(),
                                           e.at("sep_lo").get<double>(),
                                           e.at("sep_hi").get<double>());
    std::string ks = "separation,ratio,method_gap\n";
    for (const auto& r : rows)
        ks += g17(r.separation) + "," + g17(r.ratio) + "," + g17(r.method_gap) + "\n";

    dir.write_text("heat_check.csv", heat);
    dir.write_text("ks_check.csv", ks);
}

// ------------------------------------------------------------- seminorm

void validate_seminorm(RunConfig& cfg, const json& root) {
    reject_unknown(root, "config", {"command", "torus", "grid", "kernel", "experiment",
                                    "seed", "output_dir"});
    cfg.torus = parse_torus(root);
    cfg.grid = parse_grid(root, *cfg.torus);
    cfg.kernel = parse_kernel(root);
    const json& e = member(root, "config", "experiment");
    expect_object(e, "experiment");
    reject_unknown(e, "experiment", {"field"});
    json norm = json::object();
    norm["field"] = check_fieldspec(member(e, "experiment", "field"), *cfg.grid,
                                    "experiment.field");
    cfg.experiment = norm;
}

void run_seminorm(const RunConfig& cfg, RunDir& dir) {
    const GridField u = build_field(cfg.experiment.at("field"), *cfg.grid, cfg.seed);
    const SeminormBreakdown b = seminorm_all(u, cfg.kernel.s);
    std::string csv = "spectral,double_integral,extension\n";
    csv += g17(b.spectral) + "," + g17(b.double_integral) + "," + g17(b.extension) + "\n";
    dir.write_text("seminorm.csv", csv);
    dir.write_text("seminorm.json", seminorm_json(b) + "\n");
}

// ------------------------------------------------------ extension-check

void validate_extension_check(RunConfig& cfg, const json& root) {
    reject_unknown(root, "config", {"command", "torus", "grid", "kernel", "experiment",
                                    "seed", "output_dir"});
    cfg.torus = parse_torus(root);
    cfg.grid = parse_grid(root, *cfg.torus);
    cfg.kernel = parse_kernel(root);
    json e = root.contains("experiment") ? root.at("experiment") : json::object();
    expect_object(e, "experiment");
    reject_unknown(e, "experiment", {"modes"});
    json modes = json::array();
    if (e.contains("modes")) {
        if (!e.at("modes").is_array() || e.at("modes").empty())
            bad("experiment", "'modes' must be a non-empty array of frequency vectors");
        for (const auto& mv : e.at("modes")) {
            const auto k = int_list(mv, "experiment", "modes");
            if (static_cast<int>(k.size()) != cfg.grid->dim())
                bad("experiment", "each mode must list exactly dim frequencies");
            bool all_zero = true;
            for (int ki : k) all_zero = all_zero && ki == 0;
            if (all_zero) bad("experiment", "the zero mode has no decay rate to check");
            modes.push_back(k);
        }
    } else {
        for (int m : {1, 2}) {
            std::vector<int> k(cfg.grid->dim(), 0);
            k[0] = m;
            modes.push_back(k);
        }
    }
    cfg.experiment = json{{"modes", modes}};
}

void run_extension_check(const RunConfig& cfg, RunDir& dir) {
    const Grid& g = *cfg.grid;
    const double s = cfg.kernel.s;
    std::string csv = "k0,k1,k2,lambda,measured,predicted,rel_gap,harmonicity\n";
    for (const auto& mv : cfg.experiment.at("modes")) {
        const auto k = mv.get<std::vector<int>>();
        json spec{{"kind", "mode"}, {"k", k}, {"amplitude", 1.0}, {"phase", 0.0}};
        const GridField u = build_field(spec, g, cfg.seed);
        double lambda = 0.0;
        for (int i = 0; i < g.dim(); ++i) {
            const double w = 2.0 * std::numbers::pi * k[i] / g.torus().side(i);
            lambda += w * w;
        }
        const ExtensionField ext = cs_extend(u, s, ExtensionParams{});
        const GridField d = dtn(ext);
        const double measured = inner(d, u) / inner(u, u);
        const double predicted = -beta_s(s) * std::pow(lambda, 0.5 * s);
        const double gap = std::abs(measured - predicted) / std::abs(predicted);
        const double harm = harmonicity_residual(ext);
        int k3[3] = {0, 0, 0};
        for (std::size_t i = 0; i < k.size(); ++i) k3[i] = k[i];
        csv += std::to_string(k3[0]) + "," + std::to_string(k3[1]) + "," +
               std::to_string(k3[2]) + "," + g17(lambda) + "," + g17(measured) + "," +
               g17(predicted) + "," + g17(gap) + "," + g17(harm) + "\n";
    }
    dir.write_text("extension_check.csv", csv);
}

// --------------------------------------------------------- monotonicity

void validate_monotonicity(RunConfig& cfg, const json& root) {
    reject_unknown(root, "config",
                   {"command", "torus", "grid", "ac", "experiment", "seed", "output_dir"});
    cfg.torus = parse_torus(root);
    cfg.grid = parse_grid(root, *cfg.torus);
    cfg.ac = parse_ac(root, true);
    const json& e = member(root, "config", "experiment");
    expect_object(e, "experiment");
    reject_unknown(e, "experiment", {"initial", "center", "radii"});
    json norm = json::object();
    norm["initial"] = check_fieldspec(member(e, "experiment", "initial"), *cfg.grid,
                                      "experiment.initial");
    Pt center{0.0, 0.0, 0.0};
    if (e.contains("center")) {
        center = parse_point(e.at("center"), cfg.grid->dim(), "experiment", "center");
    } else {
        for (int i = 0; i < cfg.grid->dim(); ++i)
            center[i] = 0.5 * cfg.grid->torus().side(i);
    }
    json cj = json::array();
    for (int i = 0; i < cfg.grid->dim(); ++i) cj.push_back(center[i]);
    norm["center"] = cj;

    const json& rj = member(e, "experiment", "radii");
    expect_object(rj, "experiment.radii");
    reject_unknown(rj, "experiment.radii", {"lo", "hi", "count", "spacing"});
    const double lo = num_at(rj, "experiment.radii", "lo");
    const double hi = num_at(rj, "experiment.radii", "hi");
    const int count = int_or(rj, "experiment.radii", "count", 12);
    std::string spacing = "log";
    if (rj.contains("spacing")) spacing = str_at(rj, "experiment.radii", "spacing");
    if (spacing != "log" && spacing != "linear")
        bad("experiment.radii", "'spacing' must be \"log\" or \"linear\"");
    if (!(lo > 0.0 && hi > lo)) bad("experiment.radii", "need 0 < lo < hi");
    if (!(hi < 0.5 * cfg.grid->torus().min_side()))
        bad("experiment.radii", "'hi' must stay below half the shortest side");
    if (count < 2) bad("experiment.radii", "'count' must be >= 2");
    norm["radii"] =
        json{{"lo", lo}, {"hi", hi}, {"count", count}, {"spacing", spacing}};
    cfg.experiment = norm;
}

void run_monotonicity(const RunConfig& cfg, RunDir& dir) {
    const Grid& g = *cfg.grid;
    const json& e = cfg.experiment;
    const GridField u0 = build_field(e.at("initial"), g, cfg.seed);
    const ACSolution sol = gradient_flow(u0, cfg.ac);

    json side;
    side["s"] = cfg.ac.s;
    side["epsilon"] = cfg.ac.epsilon;
    side["iterations"] = sol.iterations;
    side["residual_norm"] = sol.residual_norm;
    side["energy"] = json{{"sobolev", sol.energy.sobolev},
                          {"potential", sol.energy.potential},
                          {"total", sol.energy.total}};
    side["converged"] = sol.converged;

    if (!sol.converged) {
        save_field(sol.u, dir.field_path("solution.bin"));
        dir.write_json("solution.json", side);
        throw NumericalError(
            "monotonicity: the flow did not converge; flagged solution written");
    }

    const json& rj = e.at("radii");
    const double lo = rj.at("lo").get<double>();
    const double hi = rj.at("hi").get<double>();
    const int count = rj.at("count").get<int>();
    const bool logsp = rj.at("spacing").get<std::string>() == "log";
    std::vector<double> radii(count);
    for (int i = 0; i < count; ++i) {
        const double f = double(i) / double(count - 1);
        radii[i] = logsp ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f;
    }
    const auto cj = e.at("center").get<std::vector<double>>();
    Pt center{0.0, 0.0, 0.0};
    for (int i = 0; i < g.dim(); ++i) center[i] = cj[i];

    const auto rows = phi_functional(sol.u, cfg.ac.s, cfg.ac.epsilon, center, radii);
    std::string csv = "radius,phi,sobolev_part,potential_part,quad_error\n";
    for (const auto& r : rows)
        csv += g17(r.radius) + "," + g17(r.phi) + "," + g17(r.sobolev_part) + "," +
               g17(r.potential_part) + "," + g17(r.quad_error) + "\n";

    save_field(sol.u, dir.field_path("solution.bin"));
    dir.write_json("solution.json", side);
    dir.write_text("phi.csv", csv);
}

// ------------------------------------------------------------ perimeter

void validate_perimeter(RunConfig& cfg, const json& root) {
    reject_unknown(root, "config", {"command", "torus", "grid", "kernel", "experiment",
                                    "seed", "output_dir"});
    cfg.torus = parse_torus(root);
    cfg.grid = parse_grid(root, *cfg.torus);
    cfg.kernel = parse_kernel(root);
    const json& e = member(root, "config", "experiment");
    expect_object(e, "experiment");
    reject_unknown(e, "experiment", {"shape", "s_list"});
    json norm = json::object();
    norm["shape"] =
        check_shapespec(member(e, "experiment", "shape"), *cfg.grid, "experiment.shape");
    if (e.contains("s_list")) {
        const auto sl = num_list(e.at("s_list"), "experiment", "s_list");
        for (double sv : sl)
            if (!(sv > 0.0 && sv < 1.0)) bad("experiment", "'s_list' entries must lie in (0, 1)");
        norm["s_list"] = sl;
    }
    cfg.experiment = norm;
}

void run_perimeter(const RunConfig& cfg, RunDir& dir) {
    const SetIndicator e = build_shape(cfg.experiment.at("shape"), *cfg.grid);
    const double s = cfg.kernel.s;
    const double exact = per_s(e, s);
    const double gridv = per_s_grid(e, s);
    json out;
    out["s"] = s;
    out["volume"] = set_volume(e);
    out["per_s"] = exact;
    out["per_s_grid"] = gridv;
    out["rel_gap"] = std::abs(exact - gridv) / std::max(std::abs(exact), 1e-300);
    out["classical"] = classical_perimeter(e);

    std::optional<std::string> slim;
    if (cfg.experiment.contains("s_list")) {
        const auto sl = cfg.experiment.at("s_list").get<std::vector<double>>();
        slim = limit_csv(s_to_1_limit_experiment(e, sl));
    }
    dir.write_json("perimeter.json", out);
    if (slim) dir.write_text("s_limit.csv", *slim);
}

// ------------------------------------------------------------------ nmc

void validate_nmc(RunConfig& cfg, const json& root) {
    reject_unknown(root, "config", {"command", "torus", "grid", "kernel", "experiment",
                                    "seed", "output_dir"});
    cfg.torus = parse_torus(root);
    cfg.grid = parse_grid(root, *cfg.torus);
    cfg.kernel = parse_kernel(root);
    const json& e = member(root, "config", "experiment");
    expect_object(e, "experiment");
    reject_unknown(e, "experiment", {"shape", "points"});
    json norm = json::object();
    norm["shape"] =
        check_shapespec(member(e, "experiment", "shape"), *cfg.grid, "experiment.shape");
    const json& pts = member(e, "experiment", "points");
    if (!pts.is_array() || pts.empty())
        bad("experiment", "'points' must be a non-empty array of coordinate lists");
    for (const auto& pv : pts)
        (void)parse_point(pv, cfg.grid->dim(), "experiment", "points");
    norm["points"] = pts;
    cfg.experiment = norm;
}

void run_nmc(const RunConfig& cfg, RunDir& dir) {
    const SetIndicator e = build_shape(cfg.experiment.at("shape"), *cfg.grid);
    std::string csv = "x0,x1,x2,value,error_bar\n";
    for (const auto& pv : cfg.experiment.at("points")) {
        const auto lst = pv.get<std::vector<double>>();
        Pt x{0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < lst.size(); ++i) x[i] = lst[i];
        const NmcResult r = nmc(e, x, cfg.kernel.s);
        csv += g17(x[0]) + "," + g17(x[1]) + "," + g17(x[2]) + "," + g17(r.value) +
               "," + g17(r.error_bar) + "\n";
    }
    dir.write_text("nmc.csv", csv);
}

// -------------------------------------------------------------- layer1d

void validate_layer1d(RunConfig& cfg, const json& root) {
    reject_unknown(root, "config", {"command", "ac", "experiment", "seed", "output_dir"});
    cfg.ac = parse_ac(root, false);
    const json& e = member(root, "config", "experiment");
    expect_object(e, "experiment");
    reject_unknown(e, "experiment", {"domain_half_length", "npts"});
    const double dhl = num_at(e, "experiment", "domain_half_length");
    if (!(dhl > 0.0)) bad("experiment", "'domain_half_length' must be positive");
    const int npts = int_at(e, "experiment", "npts");
    if (npts < 256 || npts % 2 != 0) bad("experiment", "'npts' must be even and >= 256");
    cfg.experiment = json{{"domain_half_length", dhl}, {"npts", npts}};
}

void run_layer1d(const RunConfig& cfg, RunDir& dir) {
    const double dhl = cfg.experiment.at("domain_half_length").get<double>();
    const int npts = cfg.experiment.at("npts").get<int>();
    const GridField v = layer_1d(cfg.ac.s, dhl, npts);

    ACParams lp;
    lp.s = cfg.ac.s;
    lp.epsilon = 1.0;
    const double res = norm_sup(residual(v, lp));

    const int n = npts;
    double odd = 0.0;
    for (int i = 0; i < n; ++i)
        odd = std::max(odd, std::abs(v[i] + v[(n - i) % n]));

    // increasing branch runs between the extrema at -L/4 and L/4, i.e.
    // wrapped indices 3n/4 .. n/4
    double mono_defect = 0.0;
    for (int i = 3 * n / 4; i < 5 * n / 4 - 1; ++i)
        mono_defect = std::max(mono_defect, v[i % n] - v[(i + 1) % n]);

    std::string csv = "x,v\n";
    for (int i = 0; i < n; ++i)
        csv += g17(v.grid.point(i)[0]) + "," + g17(v[i]) + "\n";

    json out;
    out["s"] = cfg.ac.s;
    out["domain_half_length"] = dhl;
    out["npts"] = npts;
    out["residual_sup"] = res;
    out["odd_defect_sup"] = odd;
    out["monotone_defect"] = std::max(mono_defect, 0.0);
    out["monotone_half_period"] = mono_defect <= 0.0;

    save_field(v, dir.field_path("layer.bin"));
    dir.write_text("layer.csv", csv);
    dir.write_json("layer.json", out);
}

// ------------------------------------------------------------- solve-ac

void validate_solve_ac(RunConfig& cfg, const json& root) {
    reject_unknown(root, "config",
                   {"command", "torus", "grid", "ac", "experiment", "seed", "output_dir"});
    cfg.torus = parse_torus(root);
    cfg.grid = parse_grid(root, *cfg.torus);
    cfg.ac = parse_ac(root, true);
    const json& e = member(root, "config", "experiment");
    expect_object(e, "experiment");
    reject_unknown(e, "experiment", {"initial"});
    json norm = json::object();
    norm["initial"] = check_fieldspec(member(e, "experiment", "initial"), *cfg.grid,
                                      "experiment.initial");
    cfg.experiment = norm;
}

void run_solve_ac(const RunConfig& cfg, RunDir& dir) {
    const GridField u0 = build_field(cfg.experiment.at("initial"), *cfg.grid, cfg.seed);
    const ACSolution sol = gradient_flow(u0, cfg.ac);

    std::string trace = "step,energy\n";
    for (std::size_t i = 0; i < sol.energy_trace.size(); ++i)
        trace += std::to_string(i) + "," + g17(sol.energy_trace[i]) + "\n";

    json side;
    side["s"] = cfg.ac.s;
    side["epsilon"] = cfg.ac.epsilon;
    side["iterations"] = sol.iterations;
    side["residual_norm"] = sol.residual_norm;
    side["energy"] = json{{"sobolev", sol.energy.sobolev},
                          {"potential", sol.energy.potential},
                          {"total", sol.energy.total}};
    side["converged"] = sol.converged;

    save_field(sol.u, dir.field_path("solution.bin"));
    dir.write_text("energy_trace.csv", trace);
    dir.write_json("solution.json", side);

    if (!sol.converged)
        throw NumericalError(
            "solve-ac: the flow did not converge; flagged solution written");
}

// ---------------------------------------------------------- morse-index

void validate_morse_index(RunConfig& cfg, const json& root) {
    reject_unknown(root, "config",
                   {"command", "torus", "grid", "ac", "experiment", "seed", "output_dir"});
    cfg.torus = parse_torus(root);
    cfg.grid = parse_grid(root, *cfg.torus);
    if (cfg.grid->size() > 4096)
        bad("grid", "morse-index needs a grid of at most 4096 points (dense eigensolve)");
    cfg.ac = parse_ac(root, true);
    const json& e = member(root, "config", "experiment");
    expect_object(e, "experiment");
    reject_unknown(e, "experiment", {"field", "k_max"});
    json norm = json::object();
    norm["field"] =
        check_fieldspec(member(e, "experiment", "field"), *cfg.grid, "experiment.field");
    const int k_max = int_or(e, "experiment", "k_max", 8);
    if (k_max < 1) bad("experiment", "'k_max' must be >= 1");
    norm["k_max"] = k_max;
    cfg.experiment = norm;
}

void run_morse_index(const RunConfig& cfg, RunDir& dir) {
    const GridField u = build_field(cfg.experiment.at("field"), *cfg.grid, cfg.seed);
    const int k_max = cfg.experiment.at("k_max").get<int>();
    const int idx = morse_index(u, cfg.ac, k_max);
    json out;
    out["s"] = cfg.ac.s;
    out["epsilon"] = cfg.ac.epsilon;
    out["k_max"] = k_max;
    out["index"] = idx;
    out["saturated"] = idx == k_max; // the count is then only a lower bound
    dir.write_json("morse.json", out);
}

// ------------------------------------------------------------- sweepout

void validate_sweepout(RunConfig& cfg, const json& root) {
    reject_unknown(root, "config", {"command", "torus", "grid", "kernel", "experiment",
                                    "seed", "output_dir"});
    cfg.torus = parse_torus(root);
    cfg.grid = parse_grid(root, *cfg.torus);
    cfg.kernel = parse_kernel(root);
    const json& e = member(root, "config", "experiment");
    expect_object(e, "experiment");
    reject_unknown(e, "experiment", {"p", "sphere_samples"});
    const int p = int_at(e, "experiment", "p");
    if (p < 1 || p > 64) bad("experiment", "'p' must lie in [1, 64]");
    const int samples = int_or(e, "experiment", "sphere_samples", 200);
    if (samples < 10 * (p + 1))
        bad("experiment", "'sphere_samples' must be >= 10 (p + 1)");
    cfg.experiment = json{{"p", p}, {"sphere_samples", samples}};
}

void run_sweepout(const RunConfig& cfg, RunDir& dir) {
    const Grid& g = *cfg.grid;
    const int p = cfg.experiment.at("p").get<int>();
    const int samples = cfg.experiment.at("sphere_samples").get<int>();
    Rng split(cfg.seed);
    const std::uint64_t cover_seed = split.next_u64();
    const std::uint64_t sample_seed = split.next_u64();

    const BallCover cover = ball_cover(g, p, cover_seed);
    const ScalingRow row = sweepout_max_energy(g, cover, cfg.kernel.s, samples, sample_seed);

    std::string centers = "ball,x0,x1,x2\n";
    for (int i = 0; i < cover.count(); ++i)
        centers += std::to_string(i) + "," + g17(cover.centers[i][0]) + "," +
                   g17(cover.centers[i][1]) + "," + g17(cover.centers[i][2]) + "\n";

    json out;
    out["p"] = p;
    out["radius"] = cover.radius;
    out["cover_count"] = cover.count();
    out["sphere_samples"] = samples;
    out["max_energy"] = row.max_energy;
    out["scaled"] = row.scaled;
    out["argmax_a"] = row.argmax_a;

    dir.write_text("cover.csv", centers);
    dir.write_json("sweepout.json", out);
}

// -------------------------------------------------------------- scaling

void validate_scaling(RunConfig& cfg, const json& root) {
    reject_unknown(root, "config", {"command", "torus", "grid", "kernel", "experiment",
                                    "seed", "output_dir"});
    cfg.torus = parse_torus(root);
    cfg.grid = parse_grid(root, *cfg.torus);
    cfg.kernel = parse_kernel(root);
    const json& e = member(root, "config", "experiment");
    expect_object(e, "experiment");
    reject_unknown(e, "experiment", {"p_range", "mode", "sphere_samples"});
    const auto pr = int_list(member(e, "experiment", "p_range"), "experiment", "p_range");
    if (pr.size() < 4) bad("experiment", "'p_range' needs at least four values");
    for (std::size_t i = 0; i < pr.size(); ++i) {
        if (pr[i] < 1 || pr[i] > 12)
            bad("experiment", "'p_range' values must lie in [1, 12]");
        if (i > 0 && pr[i] <= pr[i - 1])
            bad("experiment", "'p_range' must be strictly increasing");
    }
    std::string mode = "sharp_interface";
    if (e.contains("mode")) mode = str_at(e, "experiment", "mode");
    if (mode != "sharp_interface" && mode != "allen_cahn")
        bad("experiment", "'mode' must be \"sharp_interface\" or \"allen_cahn\"");
    const int samples = int_or(e, "experiment", "sphere_samples", 200);
    if (samples < 10 * (pr.back() + 1))
        bad("experiment", "'sphere_samples' must be >= 10 (max p + 1)");
    cfg.experiment = json{{"p_range", pr}, {"mode", mode}, {"sphere_samples", samples}};
}

void run_scaling(const RunConfig& cfg, RunDir& dir) {
    const auto pr = cfg.experiment.at("p_range").get<std::vector<int>>();
    const SweepMode mode =
        cfg.experiment.at("mode").get<std::string>() == "allen_cahn"
            ? SweepMode::allen_cahn
            : SweepMode::sharp_interface;
    const int samples = cfg.experiment.at("sphere_samples").get<int>();
    const ScalingReport rep =
        scaling_experiment(*cfg.grid, pr, cfg.kernel.s, mode, samples, cfg.seed);
    dir.write_text("scaling.csv", scaling_csv(rep));
    dir.write_text("scaling_fit.json", scaling_json(rep) + "\n");
}

// ------------------------------------------------------------ eps-limit

void validate_eps_limit(RunConfig& cfg, const json& root) {
    reject_unknown(root, "config", {"command", "torus", "grid", "kernel", "experiment",
                                    "seed", "output_dir"});
    cfg.torus = parse_torus(root);
    cfg.grid = parse_grid(root, *cfg.torus);
    cfg.kernel = parse_kernel(root);
    const json& e = member(root, "config", "experiment");
    expect_object(e, "experiment");
    reject_unknown(e, "experiment", {"p", "eps_list", "sphere_samples"});
    const int p = int_at(e, "experiment", "p");
    if (p < 1 || p > 64) bad("experiment", "'p' must lie in [1, 64]");
    const auto eps = num_list(member(e, "experiment", "eps_list"), "experiment", "eps_list");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0.0)) bad("experiment", "'eps_list' entries must be positive");
        if (i > 0 && !(eps[i] < eps[i - 1]))
            bad("experiment", "'eps_list' must be strictly decreasing");
    }
    if (!(eps.back() >= 2.0 * cfg.grid->max_h()))
        bad("experiment", "the smallest epsilon must be resolved: eps >= 2 max_h");
    const int samples = int_or(e, "experiment", "sphere_samples", 200);
    if (samples < 10 * (p + 1))
        bad("experiment", "'sphere_samples' must be >= 10 (p + 1)");
    cfg.experiment = json{{"p", p}, {"eps_list", eps}, {"sphere_samples", samples}};
}

void run_eps_limit(const RunConfig& cfg, RunDir& dir) {
    const auto eps = cfg.experiment.at("eps_list").get<std::vector<double>>();
    const auto rows = epsilon_limit_experiment(
        *cfg.grid, cfg.experiment.at("p").get<int>(), cfg.kernel.s, eps,
        cfg.experiment.at("sphere_samples").get<int>(), cfg.seed);
    dir.write_text("eps_limit.csv", eps_limit_csv(rows));
    int failed = 0;
    for (const auto& r : rows)
        if (!r.converged) ++failed;
    if (failed > 0)
        throw NumericalError("eps-limit: " + std::to_string(failed) + " of " +
                             std::to_string(rows.size()) +
                             " rows did not converge; flagged in eps_limit.csv");
}

// ----------------------------------------------------- bv-density-probe

void validate_bv_density(RunConfig& cfg, const json& root) {
    reject_unknown(root, "config",
                   {"command", "torus", "grid", "experiment", "seed", "output_dir"});
    cfg.torus = parse_torus(root);
    cfg.grid = parse_grid(root, *cfg.torus);
    const json& e = member(root, "config", "experiment");
    expect_object(e, "experiment");
    reject_unknown(e, "experiment", {"field", "center", "radius"});
    json norm = json::object();
    norm["field"] =
        check_fieldspec(member(e, "experiment", "field"), *cfg.grid, "experiment.field");
    (void)parse_point(member(e, "experiment", "center"), cfg.grid->dim(), "experiment",
                      "center");
    norm["center"] = e.at("center");
    const double r = num_at(e, "experiment", "radius");
    if (!(r > 0.0)) bad("experiment", "'radius' must be positive");
    norm["radius"] = r;
    cfg.experiment = norm;
}

void run_bv_density(const RunConfig& cfg, RunDir& dir) {
    const GridField u = build_field(cfg.experiment.at("field"), *cfg.grid, cfg.seed);
    const auto cj = cfg.experiment.at("center").get<std::vector<double>>();
    Pt center{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < cj.size(); ++i) center[i] = cj[i];
    const double r = cfg.experiment.at("radius").get<double>();
    const double bv = bv_probe(u, center, r);
    const DensityReport dr = density_probe(u, center, r);
    json out;
    out["radius"] = r;
    out["bv_half_ball"] = bv;
    out["deficit_plus"] = dr.deficit_plus;
    out["deficit_minus"] = dr.deficit_minus;
    out["plus_meets"] = dr.plus_meets;
    out["minus_meets"] = dr.minus_meets;
    dir.write_json("bv_density.json", out);
}

// ------------------------------------------------------------- dispatch

struct CommandDef {
    const char* name;
    void (*validate)(RunConfig&, const json&);
    void (*execute)(const RunConfig&, RunDir&);
    std::vector<std::string> (*artifacts)(const RunConfig&);
};

const CommandDef kCommands[] = {
    {"kernel-check", validate_kernel_check, run_kernel_check,
     [](const RunConfig&) {
         return std::vector<std::string>{"heat_check.csv", "ks_check.csv"};
     }},
    {"seminorm", validate_seminorm, run_seminorm,
     [](const RunConfig&) {
         return std::vector<std::string>{"seminorm.csv", "seminorm.json"};
     }},
    {"extension-check", validate_extension_check, run_extension_check,
     [](const RunConfig&) {
         return std::vector<std::string>{"extension_check.csv"};
     }},
    {"monotonicity", validate_monotonicity, run_monotonicity,
     [](const RunConfig&) {
         return std::vector<std::string>{"fields/solution.bin", "solution.json",
                                         "phi.csv"};
     }},
    {"perimeter", validate_perimeter, run_perimeter,
     [](const RunConfig& cfg) {
         std::vector<std::string> a{"perimeter.json"};
         if (cfg.experiment.contains("s_list")) a.push_back("s_limit.csv");
         return a;
     }},
    {"nmc", validate_nmc, run_nmc,
     [](const RunConfig&) { return std::vector<std::string>{"nmc.csv"}; }},
    {"layer1d", validate_layer1d, run_layer1d,
     [](const RunConfig&) {
         return std::vector<std::string>{"fields/layer.bin", "layer.csv", "layer.json"};
     }},
    {"solve-ac", validate_solve_ac, run_solve_ac,
     [](const RunConfig&) {
         return std::vector<std::string>{"fields/solution.bin", "energy_trace.csv",
                                         "solution.json"};
     }},
    {"morse-index", validate_morse_index, run_morse_index,
     [](const RunConfig&) { return std::vector<std::string>{"morse.json"}; }},
    {"sweepout", validate_sweepout, run_sweepout,
     [](const RunConfig&) {
         return std::vector<std::string>{"cover.csv", "sweepout.json"};
     }},
    {"scaling", validate_scaling, run_scaling,
     [](const RunConfig&) {
         return std::vector<std::string>{"scaling.csv", "scaling_fit.json"};
     }},
    {"eps-limit", validate_eps_limit, run_eps_limit,
     [](const RunConfig&) { return std::vector<std::string>{"eps_limit.csv"}; }},
    {"bv-density-probe", validate_bv_density, run_bv_density,
     [](const RunConfig&) { return std::vector<std::string>{"bv_density.json"}; }},
};

const CommandDef& find_command(const std::string& name) {
    for (const auto& def : kCommands)
        if (name == def.name) return def;
    std::string known;
    for (const auto& def : kCommands) {
        if (!known.empty()) known += ", ";
        known += def.name;
    }
    throw ConfigError("config: unknown command '" + name + "' (expected one of " +
                      known + ")");
}

RunConfig validate(const json& root, const CliOptions& opts) {
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    RunConfig cfg;
    cfg.command = str_at(root, "config", "command");
    const CommandDef& def = find_command(cfg.command);
    cfg.output_dir = str_at(root, "config", "output_dir");
    if (cfg.output_dir.empty()) bad("config", "'output_dir' must not be empty");
    cfg.seed = root.contains("seed") ? u64_at(root, "config", "seed") : 0;
    if (opts.seed) cfg.seed = *opts.seed;
    cfg.threads = opts.threads;
    def.validate(cfg, root);
    cfg.echo = root;
    cfg.echo["seed"] = cfg.seed;
    return cfg;
}

void print_plan(const RunConfig& cfg) {
    const CommandDef& def = find_command(cfg.command);
    std::ostringstream out;
    out << "plan: " << cfg.command << "\n";
    if (cfg.torus) {
        out << "torus: dim " << cfg.torus->dim() << ", sides [";
        for (int i = 0; i < cfg.torus->dim(); ++i)
            out << (i ? ", " : "") << g17(cfg.torus->side(i));
        out << "]\n";
    }
    if (cfg.grid) {
        out << "grid: [";
        for (int i = 0; i < cfg.grid->dim(); ++i)
            out << (i ? ", " : "") << cfg.grid->npts(i);
        out << "]\n";
    }
    const bool acs = cfg.command == "monotonicity" || cfg.command == "solve-ac" ||
                     cfg.command == "morse-index" || cfg.command == "layer1d";
    out << "s = " << g17(acs ? cfg.ac.s : cfg.kernel.s) << "\n";
    if (acs && cfg.command != "layer1d")
        out << "epsilon = " << g17(cfg.ac.epsilon) << ", flow_dt = " << g17(cfg.ac.flow_dt)
            << ", tol_residual = " << g17(cfg.ac.tol_residual)
            << ", max_iters = " << cfg.ac.max_iters << "\n";
    out << "experiment: " << cfg.experiment.dump() << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "output_dir: " << cfg.output_dir << "\n";
    out << "artifacts:";
    for (const auto& a : def.artifacts(cfg)) out << " " << a;
    out << " manifest.json\n";
    std::cout << out.str();
}

} // namespace

void run_cli(const CliOptions& opts) {
    if (opts.threads < 1) throw ConfigError("cli: --threads must be >= 1");
    std::ifstream in(opts.config_path);
    if (!in) throw ConfigError("cli: cannot open config '" + opts.config_path + "'");
    json root;
    try {
        root = json::parse(in, nullptr, true, true); // comments allowed
    } catch (const json::parse_error& err) {
        throw ConfigError(std::string("cli: config is not valid JSON: ") + err.what());
    }

    const RunConfig cfg = validate(root, opts);
    if (opts.dry_run) {
        print_plan(cfg);
        return;
    }

    const CommandDef& def = find_command(cfg.command);
    const auto t0 = std::chrono::steady_clock::now();
    RunDir dir(cfg.output_dir);
    const auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    try {
        def.execute(cfg, dir);
    } catch (const NumericalError& err) {
        write_manifest(dir, cfg, elapsed(), std::string("numerical-failure: ") + err.what());
        throw;
    } catch (const ConfigError&) {
        throw; // raised before any artifact is written
    } catch (const std::invalid_argument& err) {
        // domain-level rejection of structurally valid parameters; nothing
        // has been written yet (executors write at the end)
        throw ConfigError(err.what());
    } catch (const std::exception& err) {
        write_manifest(dir, cfg, elapsed(), std::string("numerical-failure: ") + err.what());
        throw NumericalError(err.what());
    }
    write_manifest(dir, cfg, elapsed(), "ok");
}

} // namespace fractorus
