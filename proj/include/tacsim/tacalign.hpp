#ifndef TACSIM_TACALIGN_HPP
#define TACSIM_TACALIGN_HPP

#include "tacsim/energy.hpp"
#include "tacsim/tactile.hpp"

#include <cstdint>
#include <functional>

namespace tacsim {

using Vec6 = Eigen::Matrix<double, 6, 1>;

// ---------------------------------------------------------------------------
// Impedance controller alignment

struct ImpedanceGains {
    Vec6 kp = Vec6::Ones();
    Vec6 kd = 2.0 * Vec6::Ones();

    /// kd = 2 sqrt(kp) componentwise (critical damping for unit inertia).
    static ImpedanceGains from_kp(const Vec6& kp);
    void validate() const;
};

/// Translational (x, y, z) then rotation vector (rx, ry, rz); the rotational
/// error is the minimal axis-angle difference.
Vec6 impedance_force(const ImpedanceGains& g, const Vec6& p_targ, const Vec6& p_ee, const Vec6& v_ee);

struct PlantModel {
    Vec6 inertia = Vec6::Ones();
    Vec6 extra_damping = Vec6::Zero(); ///< unmodeled viscous damping
    int delay_steps = 0;               ///< actuation delay
    double dt = 0.01;
    void validate() const;
};

enum class Motion { Tx, Ty, Tz, Rx, Ry, Rz };
inline constexpr std::array<Motion, 6> kCanonicalMotions{Motion::Tx, Motion::Ty, Motion::Tz,
                                                         Motion::Rx, Motion::Ry, Motion::Rz};
Motion parse_motion(const std::string& s);
std::string motion_name(Motion m);

/// Targets ramp linearly from 0 to the amplitude over the first half, then hold.
struct MotionProfile {
    int steps = 300;
    double trans_amplitude = 0.02; ///< m
    double rot_amplitude = 0.1745; ///< rad
};

struct Trajectory {
    std::vector<Vec6> poses;
};

Vec6 motion_target(Motion m, int step, const MotionProfile& prof);

/// Per-axis double integrator under the impedance wrench, semi-implicit Euler,
/// with the plant's extra damping and actuation delay. Rotations integrate the
/// rotation vector directly (exact for the single-axis canonical motions).
Trajectory rollout_plant(const PlantModel& plant, const ImpedanceGains& g, Motion motion, const MotionProfile& prof);

struct Discrepancy {
    double trans_mm2 = 0.0;
    double rot_deg2 = 0.0;
    double trans_rms_mm() const;
    double rot_rms_deg() const;
};

/// (1/T) sum ||dx||^2 in mm^2 and (1/T) sum angle^2 in deg^2.
Discrepancy trajectory_discrepancy(const Trajectory& a, const Trajectory& b);

/// Mean over the six canonical motions.
Discrepancy mean_discrepancy(const PlantModel& sim, const ImpedanceGains& g_sim, const PlantModel& real,
                             const ImpedanceGains& g_real, const MotionProfile& prof);

struct GainPair {
    Vec6 kp_sim = Vec6::Ones();
    Vec6 kp_real = Vec6::Ones();
};

struct AlignOptions {
    MotionProfile profile;
    Vec6 kp_lo = (Vec6() << 50, 50, 50, 5, 5, 5).finished();
    Vec6 kp_hi = (Vec6() << 2000, 2000, 2000, 200, 200, 200).finished();
    int popsize = 12;
    int iters = 150;
    std::uint64_t seed = 0;
    /// Scalarization: D_trans / trans_scale^2 + D_rot / rot_scale^2.
    double trans_scale_mm = 3.0;
    double rot_scale_deg = 0.5;
};

struct AlignResult {
    GainPair gains;
    std::vector<GainPair> gain_history;     ///< after each half-round, best so far
    std::vector<double> trans_rms_history;  ///< mm
    std::vector<double> rot_rms_history;    ///< deg
    std::vector<double> objective_history;
};

/// Alternates CMA-ES in log-gain space over kp_sim (kp_real fixed) and over
/// kp_real (kp_sim fixed). A candidate replaces the current pair only when it
/// lowers the objective without raising either discrepancy component.
AlignResult alternate_align(const PlantModel& plant_sim, const PlantModel& plant_real, const GainPair& init,
                            int rounds, const AlignOptions& opt = {});

// ---------------------------------------------------------------------------
// CMA-ES

struct CmaesOptions {
    int popsize = 12;
    int iters = 80;
    std::uint64_t seed = 0;
    double sigma0 = 0.3;       ///< in normalized [0, 1] coordinates
    VecX x0;                   ///< normalized start, default the box centre
    double ftarget = -std::numeric_limits<double>::infinity(); ///< stop once best <= ftarget
    int workers = 1;           ///< parallel objective evaluations per generation
};

struct CmaesResult {
    VecX x_best;                      ///< denormalized
    double f_best = std::numeric_limits<double>::infinity();
    std::vector<double> loss_history; ///< best-so-far after each generation
    int evaluations = 0;
};

/// (mu/mu_w, lambda)-CMA-ES on the box [lo, hi], searching in [0, 1]^n with
/// reflection at the faces. Non-finite objective values count as +inf.
CmaesResult cmaes_minimize(const std::function<double(const VecX&)>& f, const VecX& lo, const VecX& hi,
                           const CmaesOptions& opt);

// ---------------------------------------------------------------------------
// Material calibration

/// Parameters (E, nu, rho, mu_f) in SI units.
VecX material_to_theta(const Material& m);
Material theta_to_material(const VecX& theta);

struct CalibrationProblem {
    VecX lo = (VecX(4) << 1e4, 0.4, 1e3, 0.25).finished();
    VecX hi = (VecX(4) << 2e5, 0.497, 5e3, 2.5).finished();
    std::vector<FieldSequence> reference; ///< N sequences of K frames
    std::function<std::vector<FieldSequence>(const Material&)> simulate;
    void validate() const;
};

/// field_mse against the reference; +inf when the simulation throws.
double calibration_loss(const CalibrationProblem& prob, const Material& m);

struct CalibrationResult {
    Material material;
    VecX theta_star;
    double loss = 0.0;
    std::vector<double> loss_history;
    int evaluations = 0;
};

CalibrationResult calibrate_material(const CalibrationProblem& prob, const CmaesOptions& opt);

// ---------------------------------------------------------------------------
// Domain randomization

struct Range {
    double lo = 0.0, hi = 0.0;
};

enum class Scope { Episode, Step };

struct RandomizationEntry {
    std::string name;
    std::string unit;
    Scope scope = Scope::Episode;
    Range range;
};

struct RandomizationConfig {
    std::vector<RandomizationEntry> entries;
    static RandomizationConfig defaults();
    void validate() const;
};

struct RandomizationSample {
    std::string name;
    std::string unit;
    Scope scope = Scope::Episode;
    double value = 0.0;
};

/// Independent uniform draws, in config order, from mt19937_64(seed).
std::vector<RandomizationSample> sample_randomization(const RandomizationConfig& cfg, std::uint64_t seed);

} // namespace tacsim

#endif
