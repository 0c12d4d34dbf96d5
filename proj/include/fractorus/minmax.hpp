#pragma once

#include "fractorus/allen_cahn.hpp"
#include "fractorus/perimeter.hpp"
#include "fractorus/torus.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fractorus {

// Min-max machinery over the polynomial-sign sweepout family: disjoint
// ball covers, S^p members, max-energy sampling, the p^{s/n} scaling
// experiment, a Borsuk-Ulam balance probe, string-method mountain passes,
// and the eps -> 0 interface-convergence experiment.

// Maximal disjoint collection of radius-r balls whose 3r-dilations cover
// the torus; r = (min side / 6) p^{-1/n}.
struct BallCover {
    int p = 1;
    double radius = 0.0;
    std::vector<Pt> centers;
    int count() const { return static_cast<int>(centers.size()); }
};

// Greedy over a seeded shuffle of the grid points; centers accepted at
// pairwise distance >= 2r. The 3r-cover property is verified by sweeping
// every grid point before returning.
BallCover ball_cover(const Grid& grid, int p, std::uint64_t seed);

// One member u_a of the sweepout: the cover balls line up along a virtual
// axis (patch i occupies the interval (6ri, 6r(i+1)) through its first
// coordinate), and u_a is the sign of P_a(z) = a_0 + a_1 z + ... + a_p z^p
// there. Patches disjointify in center order, so the member is defined on
// all of the torus and flips sign pointwise under a -> -a.
struct SweepoutMember {
    std::vector<double> a; // unit vector in R^{p+1}
    SetIndicator set;
    EnergyBreakdown energy;
};

SweepoutMember sweepout_member(const Grid& grid, const BallCover& cover,
                               const std::vector<double>& a, double s);

struct ScalingRow {
    int p = 0;
    int cover_count = 0;
    double radius = 0.0;
    double max_energy = 0.0;
    double scaled = 0.0; // (1 - s) max_energy
    std::vector<double> argmax_a;
};

// Maximize the member energy over a seeded sample of S^p (each antipodal
// pair evaluated once; nested in sphere_samples, so doubling the budget
// never lowers the max). sphere_samples must be >= 10 (p + 1).
ScalingRow sweepout_max_energy(const Grid& grid, const BallCover& cover,
                               double s, int sphere_samples,
                               std::uint64_t seed);

enum class SweepMode { sharp_interface, allen_cahn };

struct ScalingReport {
    std::vector<ScalingRow> rows;
    double slope = 0.0;
    double slope_stderr = 0.0;
    double target = 0.0; // s / n
    double s = 0.0;
    SweepMode mode = SweepMode::sharp_interface;
};

// Fit log((1-s) max energy) against log p over p_range (at least four
// values in [1, 12]). Sharp mode scores members by the corrected pair-sum
// perimeter; allen_cahn mode by the AC energy of the +-1 field. The two
// agree to roundoff, which is the point of carrying both.
ScalingReport scaling_experiment(const Grid& grid,
                                 const std::vector<int>& p_range, double s,
                                 SweepMode mode, int sphere_samples,
                                 std::uint64_t seed);

std::string scaling_csv(const ScalingReport& report);
std::string scaling_json(const ScalingReport& report);

struct BorsukBallRow {
    int ball = 0;
    double average = 0.0;          // mean of the witness over B_r(q_i)
    double localized_energy = 0.0; // per_s localized to the ball
};

struct BorsukReport {
    std::vector<double> witness_a;
    double max_average = 0.0; // max_i |average_i| at the witness
    std::vector<BorsukBallRow> rows;
    double c0 = 0.0; // min over balls of (1-s) E_i r^{s-n}
    int samples = 0;
};

// Search the sampled sphere for the member best balancing the first p
// cover balls simultaneously (an odd map S^p -> R^p must vanish, so denser
// samples drive max_average toward zero). Rows report the witness's
// per-ball averages and localized energies; c0 is the fitted constant of
// the per-ball energy lower bound.
BorsukReport borsuk_probe(const Grid& grid, const BallCover& cover, double s,
                          int sphere_samples, std::uint64_t seed);

struct MountainPassReport {
    std::vector<double> sweep_max; // path max per accepted sweep
    GridField saddle;
    double saddle_residual = 0.0;
    EnergyBreakdown saddle_energy;
    int saddle_index = -1;
    bool converged = false;
};

// String method between two converged minimizers: interior nodes descend
// by semi-implicit steps, the path reparametrizes to uniform L2 arclength,
// and a sweep is accepted only if the path max does not increase. The
// max node is then refined by a climbing step (tangent component of the
// force reversed) until its residual drops below 10x the flow tolerance.
// Throws if the endpoints sit in the same basin (the path collapses).
MountainPassReport mountain_pass(const GridField& u_minus,
                                 const GridField& u_plus,
                                 const ACParams& params, int nodes);

struct EpsLimitRow {
    double epsilon = 0.0;
    double sobolev = 0.0;
    double potential = 0.0;
    double per_threshold = 0.0;   // per_s of the sign set of the solution
    double interface_drift = 0.0; // volume where the sign set changed
    bool converged = false;
};

// For each epsilon (strictly decreasing, min >= 2h): mollify the sweepout
// argmax member at scale epsilon, run the gradient flow, and record the
// energy split, the perimeter of the thresholded set, and the thresholded
// set's drift from the previous row. Non-converged rows are flagged and
// the experiment continues.
std::vector<EpsLimitRow> epsilon_limit_experiment(
    const Grid& grid, int p, double s, const std::vector<double>& eps_list,
    int sphere_samples, std::uint64_t seed);

std::string eps_limit_csv(const std::vector<EpsLimitRow>& rows);

} // namespace fractorus
