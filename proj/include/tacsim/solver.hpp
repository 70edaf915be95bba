#ifndef TACSIM_SOLVER_HPP
#define TACSIM_SOLVER_HPP

#include "tacsim/contact.hpp"

#include <functional>
#include <limits>

namespace tacsim {

struct SolverConfig {
    double h = 5e-3;
    int max_iters = 200;
    double tol_dx = 1e-6;
    BarrierParams barrier;
    FrictionParams friction;
    bool gravity = false;
    Vec3 gravity_accel{0.0, 0.0, -9.81};
    bool self_contact = false;
    /// Upper bound on substeps per script frame; larger jumps are rejected.
    int max_substeps = 256;

    void validate() const;
};

struct RigidPose {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();

    Vec3 apply(const Vec3& p) const { return orientation * p + position; }
};

/// Linear interpolation of position, slerp of orientation.
RigidPose interpolate(const RigidPose& a, const RigidPose& b, double s);

struct RigidFrame {
    double time = 0.0;
    RigidPose pose;
    bool observed = true; ///< false for preload frames that are simulated but not reported
};

struct RigidScript {
    std::vector<RigidFrame> frames;
    /// Strictly increasing timestamps and unit quaternions.
    void validate() const;
};

struct SolverScratch {
    VecX g, g_prev, p, y, P;
};

/// Positions of all gel vertices followed by the indenter shell vertices.
struct SimState {
    VecX x;
    VecX v;
    double t = 0.0;
    RigidPose pose;
    SolverScratch scratch;
};

struct StepStats {
    int iterations = 0;
    bool converged = false;
    double grad_norm = 0.0;
    /// Global minimum gel-indenter distance after the step, capped at the
    /// verification radius when nothing is closer.
    double min_distance = std::numeric_limits<double>::infinity();
    int active_contacts = 0;
    double energy_start = 0.0;
    double energy_end = 0.0;
    int restarts = 0;
    std::vector<double> step_norms; ///< ||alpha p||_inf per inner iteration
};

/// p = -P g + beta p_prev with the preconditioned Dai-Kou beta; restarts
/// (beta = 0) on the first iteration or when |y^T p_prev| is negligible.
VecX dk_direction(const VecX& g, const VecX& g_prev, const VecX& p_prev, const VecX& P, bool first);

/// Same with P given as a symmetric positive semidefinite linear operator.
using Preconditioner = std::function<VecX(const VecX&)>;
VecX dk_direction(const VecX& g, const VecX& g_prev, const VecX& p_prev, const Preconditioner& P, bool first);

/// min(dhat / (2 ||p||_inf), -g^T p / p^T H p); the bound alone when the
/// curvature is not positive. Returns 0 for p = 0. The result always
/// satisfies alpha * ||p||_inf <= dhat / 2 in floating point.
double step_size(const VecX& g, const VecX& p, double quadform, double dhat);

/// Relative pose and 6-D velocity (linear, angular) of the indenter in the
/// sensor frame, reported once per accepted step.
using Twist = Eigen::Matrix<double, 6, 1>;
using StepObserver = std::function<void(const RigidPose&, const Twist&)>;

/// One gel pad plus one kinematically scripted rigid indenter.
class ContactSimulator {
public:
    ContactSimulator(TetMesh gel, SurfaceMesh indenter, Material mat, SolverConfig cfg);

    SimState rest_state(const RigidPose& pose) const;

    /// One implicit Euler step moving the indenter to `target`. The state is
    /// updated in place only when the step succeeds.
    StepStats step(SimState& state, const RigidPose& target) const;

    /// Incremental potential of a step started at `start` with the indenter
    /// at `target`, evaluated at full positions x. Infinity when infeasible.
    double step_objective(const SimState& start, const RigidPose& target, const VecX& x) const;

    /// Substeps each frame so the boundary moves at most dhat/2 per step.
    /// Returns one state per frame (the initial state alone for an empty script).
    std::vector<SimState> simulate_sequence(const SimState& initial, const RigidScript& script,
                                            std::vector<StepStats>* stats = nullptr,
                                            const StepObserver& observer = {}) const;

    /// Number of implicit steps used between two poses.
    int substeps_between(const RigidPose& a, const RigidPose& b) const;

    VecX rigid_positions(const RigidPose& pose) const;

    const TetMesh& gel() const { return gel_; }
    const SurfaceMesh& gel_surface() const { return surface_; }
    const SurfaceMesh& indenter() const { return indenter_; }
    const Material& material() const { return mat_; }
    const SolverConfig& config() const { return cfg_; }
    const VecX& node_masses() const { return masses_; }
    int num_gel_vertices() const { return static_cast<int>(gel_.vertices.size()); }
    /// True for coordinates the solver may move.
    const std::vector<char>& free_dofs() const { return free_; }

private:
    struct StepContext;
    struct Evaluation;

    void build_candidates(StepContext& ctx, const VecX& x) const;
    bool contact_distances(const StepContext& ctx, const VecX& x, std::vector<double>& d) const;
    Evaluation evaluate(const StepContext& ctx, const VecX& x) const;
    StepContext make_context(const SimState& start, const RigidPose& target) const;

    TetMesh gel_;
    SurfaceMesh surface_;
    SurfaceMesh indenter_;
    Material mat_;
    SolverConfig cfg_;
    VecX masses_;
    std::vector<char> free_;
    double rigid_radius_ = 0.0;
};

} // namespace tacsim

#endif
