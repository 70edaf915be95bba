#ifndef TACSIM_BASELINES_HPP
#define TACSIM_BASELINES_HPP

#include "tacsim/solver.hpp"
#include "tacsim/tactile.hpp"

namespace tacsim {

// ---------------------------------------------------------------------------
// Explicit MPM: quadratic B-splines, PIC transfers, fixed-corotated stress.

struct MpmState {
    std::vector<Vec3> x, v, x_rest;
    std::vector<double> m, V;
    std::vector<Mat3> F;

    Vec3 origin = Vec3::Zero();
    double dx = 0.0;
    std::array<int, 3> dims{0, 0, 0};
    std::vector<double> grid_m;
    std::vector<Vec3> grid_v;
    /// Grid layers k <= fixed_layer have zero velocity (the pad's glued base).
    int fixed_layer = 0;

    std::vector<int> markers; ///< tracked particle indices, row-major 7 x 9
    Mat3 sensor_frame = Mat3::Identity();
    double t = 0.0;

    std::size_t grid_index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
    }
};

struct MpmConfig {
    double dx = 0.0;          ///< 0 selects pad thickness / 8
    int ppc = 2;              ///< particles per cell per axis
    double damping = 0.0;     ///< grid velocity damping rate (1/s)
    double headroom = 0.0;    ///< extra grid height above the pad for the indenter (m)
    double marker_mass_fraction = 1e-6;
};

/// Particles filling the box [lo, hi] plus one tracer particle per marker.
MpmState mpm_init(const Vec3& lo, const Vec3& hi, const Material& mat, const MpmConfig& cfg,
                  const std::vector<Vec3>& marker_rest, const Mat3& sensor_frame);

/// Largest dt allowed by the CFL guard: 0.3 dx / sqrt((lambda + 2 mu) / rho).
double mpm_max_dt(double dx, const Material& mat);

/// Kinematic rigid body imposed as a grid-velocity condition: grid nodes inside
/// the shape take the rigid velocity.
struct MpmCollider {
    const SdfGrid* sdf = nullptr; ///< in body coordinates
    RigidPose pose;
    Vec3 linear = Vec3::Zero();
    Vec3 angular = Vec3::Zero();
};

/// One explicit step. Throws InvalidArgument when dt violates the CFL guard.
void mpm_step(MpmState& s, double dt, const Material& mat, const MpmCollider& collider, double damping = 0.0);

/// Sum of grid node masses from the last P2G transfer.
double mpm_grid_mass(const MpmState& s);
double mpm_particle_mass(const MpmState& s);

/// Zeroes every particle velocity when any exceeds vmax; returns whether it fired.
bool mpm_explosion_guard(MpmState& s, double vmax);

MarkerField mpm_marker_field(const MpmState& s, const std::vector<int>& tracked);

// ---------------------------------------------------------------------------
// SDF penalty point model

struct PenaltyTactileParams {
    double k_n = 1e3;
    double k_d = 0.0;
    double k_t = 1e2;
    double mu = 1.0;
    double kv_kappa = 0.0; ///< rigid-body Kelvin-Voigt law; not used by the point model
    double kv_c = 0.0;
    void validate() const;
};

struct TactilePointSet {
    std::vector<Vec3> points; ///< sensor frame
    std::vector<Vec3> f_n, f_t;
    std::vector<char> skipped; ///< degenerate SDF gradient
    Mat3 sensor_frame = Mat3::Identity();
};

/// Points at the rest marker positions.
TactilePointSet make_tactile_points(const MarkerMapping& map);

/// Object pose and twist (linear, angular about the object origin) in the
/// sensor frame. Pure function of its inputs.
TactilePointSet penalty_tactile(TactilePointSet points, const SdfGrid& sdf, const RigidPose& rel_pose,
                                const Twist& rel_vel, const PenaltyTactileParams& params);

/// Global constant mapping the reference press's largest tangential force to
/// the reference's largest marker displacement. Zero when there is no force.
double penalty_normalization(const std::vector<TactilePointSet>& reference, double reference_max_u);

/// u = scale * tangential force projected on the sensor plane.
MarkerField force_to_pseudo_displacement(const TactilePointSet& points, double scale);

} // namespace tacsim

#endif
