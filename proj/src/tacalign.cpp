#include "tacsim/tacalign.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

namespace tacsim {

namespace {

Quat rotvec_to_quat(const Vec3& r) {
    const double a = r.norm();
    if (a == 0.0) return Quat::Identity();
    return Quat(Eigen::AngleAxisd(a, r / a));
}

Vec3 quat_to_rotvec(Quat q) {
    if (q.w() < 0) q.coeffs() *= -1.0; // minimal angle
    const double s = q.vec().norm();
    if (s == 0.0) return Vec3::Zero();
    const double angle = 2.0 * std::atan2(s, q.w());
    return angle * q.vec() / s;
}

constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

} // namespace

ImpedanceGains ImpedanceGains::from_kp(const Vec6& kp) {
    ImpedanceGains g;
    g.kp = kp;
    g.kd = 2.0 * kp.cwiseSqrt();
    g.validate();
    return g;
}

void ImpedanceGains::validate() const {
    for (int i = 0; i < 6; ++i) {
        if (!(kp[i] > 0) || !std::isfinite(kp[i]))
            throw InvalidArgument("impedance gains: kp[" + std::to_string(i) + "] must be positive");
        if (!(kd[i] >= 0) || !std::isfinite(kd[i]))
            throw InvalidArgument("impedance gains: kd[" + std::to_string(i) + "] must be >= 0");
    }
}

Vec6 impedance_force(const ImpedanceGains& g, const Vec6& p_targ, const Vec6& p_ee, const Vec6& v_ee) {
    Vec6 err;
    err.head<3>() = p_targ.head<3>() - p_ee.head<3>();
    err.tail<3>() = quat_to_rotvec(rotvec_to_quat(p_targ.tail<3>()) * rotvec_to_quat(p_ee.tail<3>()).conjugate());
    return g.kp.cwiseProduct(err) - g.kd.cwiseProduct(v_ee);
}

void PlantModel::validate() const {
    for (int i = 0; i < 6; ++i) {
        if (!(inertia[i] > 0)) throw InvalidArgument("plant: inertia[" + std::to_string(i) + "] must be positive");
        if (!(extra_damping[i] >= 0)) throw InvalidArgument("plant: extra_damping must be >= 0");
    }
    if (delay_steps < 0) throw InvalidArgument("plant: delay_steps must be >= 0");
    if (!(dt > 0)) throw InvalidArgument("plant: dt must be positive");
}

Motion parse_motion(const std::string& s) {
    static const char* names[] = {"tx", "ty", "tz", "rx", "ry", "rz"};
    for (int i = 0; i < 6; ++i)
        if (s == names[i]) return kCanonicalMotions[static_cast<std::size_t>(i)];
    throw InvalidArgument("unknown motion '" + s + "' (expected tx|ty|tz|rx|ry|rz)");
}

std::string motion_name(Motion m) {
    static const char* names[] = {"tx", "ty", "tz", "rx", "ry", "rz"};
    return names[static_cast<int>(m)];
}

Vec6 motion_target(Motion m, int step, const MotionProfile& prof) {
    const double ramp = std::min(1.0, static_cast<double>(step) / std::max(1, prof.steps / 2));
    const int axis = static_cast<int>(m);
    Vec6 t = Vec6::Zero();
    t[axis] = ramp * (axis < 3 ? prof.trans_amplitude : prof.rot_amplitude);
    return t;
}

Trajectory rollout_plant(const PlantModel& plant, const ImpedanceGains& g, Motion motion, const MotionProfile& prof) {
    plant.validate();
    g.validate();
    if (prof.steps < 2) throw InvalidArgument("rollout: need at least 2 steps");
    Trajectory tr;
    tr.poses.reserve(static_cast<std::size_t>(prof.steps));
    Vec6 x = Vec6::Zero(), v = Vec6::Zero();
    std::deque<Vec6> pending(static_cast<std::size_t>(plant.delay_steps), Vec6::Zero());
    for (int t = 0; t < prof.steps; ++t) {
        pending.push_back(impedance_force(g, motion_target(motion, t, prof), x, v));
        const Vec6 f = pending.front();
        pending.pop_front();
        const Vec6 a = (f - plant.extra_damping.cwiseProduct(v)).cwiseQuotient(plant.inertia);
        v += plant.dt * a;
        x += plant.dt * v;
        tr.poses.push_back(x);
    }
    return tr;
}

double Discrepancy::trans_rms_mm() const { return std::sqrt(trans_mm2); }
double Discrepancy::rot_rms_deg() const { return std::sqrt(rot_deg2); }

Discrepancy trajectory_discrepancy(const Trajectory& a, const Trajectory& b) {
    if (a.poses.size() != b.poses.size() || a.poses.empty())
        throw InvalidArgument("trajectory_discrepancy: lengths differ (" + std::to_string(a.poses.size()) + " vs " +
                              std::to_string(b.poses.size()) + ")");
    Discrepancy d;
    for (std::size_t t = 0; t < a.poses.size(); ++t) {
        d.trans_mm2 += (1e3 * (a.poses[t].head<3>() - b.poses[t].head<3>())).squaredNorm();
        const Quat rel = rotvec_to_quat(a.poses[t].tail<3>()) * rotvec_to_quat(b.poses[t].tail<3>()).conjugate();
        const double ang = kRadToDeg * quat_to_rotvec(rel).norm();
        d.rot_deg2 += ang * ang;
    }
    const double T = static_cast<double>(a.poses.size());
    d.trans_mm2 /= T;
    d.rot_deg2 /= T;
    return d;
}

Discrepancy mean_discrepancy(const PlantModel& sim, const ImpedanceGains& g_sim, const PlantModel& real,
                             const ImpedanceGains& g_real, const MotionProfile& prof) {
    Discrepancy total;
    for (Motion m : kCanonicalMotions) {
        const auto d = trajectory_discrepancy(rollout_plant(sim, g_sim, m, prof), rollout_plant(real, g_real, m, prof));
        total.trans_mm2 += d.trans_mm2 / 6.0;
        total.rot_deg2 += d.rot_deg2 / 6.0;
    }
    return total;
}

AlignResult alternate_align(const PlantModel& plant_sim, const PlantModel& plant_real, const GainPair& init,
                            int rounds, const AlignOptions& opt) {
    if (rounds < 1) throw InvalidArgument("alternate_align: rounds must be >= 1");
    plant_sim.validate();
    plant_real.validate();
    for (int i = 0; i < 6; ++i)
        if (!(opt.kp_lo[i] > 0 && opt.kp_lo[i] < opt.kp_hi[i]))
            throw InvalidArgument("alternate_align: gain box needs 0 < lo < hi");

    auto objective = [&](const GainPair& gp, Discrepancy* out) {
        const Discrepancy d = mean_discrepancy(plant_sim, ImpedanceGains::from_kp(gp.kp_sim), plant_real,
                                               ImpedanceGains::from_kp(gp.kp_real), opt.profile);
        if (out) *out = d;
        return d.trans_mm2 / (opt.trans_scale_mm * opt.trans_scale_mm) +
               d.rot_deg2 / (opt.rot_scale_deg * opt.rot_scale_deg);
    };

    const VecX lo = opt.kp_lo.array().log(), hi = opt.kp_hi.array().log();
    AlignResult res;
    GainPair cur = init;
    Discrepancy d;
    double best = objective(cur, &d);
    auto record = [&] {
        res.gain_history.push_back(cur);
        res.trans_rms_history.push_back(d.trans_rms_mm());
        res.rot_rms_history.push_back(d.rot_rms_deg());
        res.objective_history.push_back(best);
    };
    record();

    for (int r = 0; r < rounds; ++r) {
        for (int side = 0; side < 2; ++side) {
            CmaesOptions co;
            co.popsize = opt.popsize;
            co.iters = opt.iters;
            co.seed = opt.seed + static_cast<std::uint64_t>(2 * r + side);
            co.sigma0 = 0.2;
            const Vec6& start = side == 0 ? cur.kp_sim : cur.kp_real;
            co.x0 = ((start.array().log() - lo.array()) / (hi - lo).array()).cwiseMax(0.0).cwiseMin(1.0);
            auto f = [&](const VecX& logkp) {
                GainPair gp = cur;
                (side == 0 ? gp.kp_sim : gp.kp_real) = logkp.array().exp();
                return objective(gp, nullptr);
            };
            const auto cr = cmaes_minimize(f, lo, hi, co);
            GainPair cand = cur;
            (side == 0 ? cand.kp_sim : cand.kp_real) = cr.x_best.array().exp();
            Discrepancy dc;
            const double v = objective(cand, &dc);
            // Both components must not get worse so each history is non-increasing.
            if (v < best && dc.trans_mm2 <= d.trans_mm2 && dc.rot_deg2 <= d.rot_deg2) {
                best = v;
                cur = cand;
                d = dc;
            }
            record();
        }
    }
    res.gains = cur;
    return res;
}

// ---------------------------------------------------------------------------

RandomizationConfig RandomizationConfig::defaults() {
    RandomizationConfig c;
    auto add = [&c](std::string name, std::string unit, Scope s, double lo, double hi) {
        c.entries.push_back({std::move(name), std::move(unit), s, {lo, hi}});
    };
    const Scope E = Scope::Episode, S = Scope::Step;
    add("controller_kp", "N/m", E, 400, 800);
    add("peg_friction", "", E, 0.5, 1.0);
    add("socket_x", "m", E, 0.5975, 0.6925);
    add("socket_y", "m", E, -0.0025, 0.0025);
    add("socket_z", "m", E, 0.0475, 0.0525);
    add("holding_x", "m", E, -0.003, 0.003);
    add("holding_z", "m", E, -0.003, 0.003);
    add("holding_rot_y", "deg", E, -35, 35);
    add("hand_x", "m", E, -0.02, 0.02);
    add("hand_y", "m", E, -0.02, 0.02);
    add("hand_z", "m", E, 0.065, 0.085);
    add("hand_rot_x", "rad", E, 3.1415, 3.1415);
    add("hand_rot_y", "rad", E, 0.0, 0.0);
    add("hand_rot_z", "rad", E, -0.785, 0.785);
    add("ee_noise_trans", "m", S, -0.005, 0.005);
    add("ee_noise_rot", "rad", S, -0.2, 0.2);
    add("ipc_move_noise_trans", "mm", S, -1.0, 1.0);
    add("ipc_move_noise_rot", "rad", S, -0.05, 0.05);
    return c;
}

void RandomizationConfig::validate() const {
    for (const auto& e : entries) {
        if (!std::isfinite(e.range.lo) || !std::isfinite(e.range.hi) || e.range.lo > e.range.hi)
            throw InvalidArgument("randomization: range '" + e.name + "' needs finite lo <= hi");
    }
}

std::vector<RandomizationSample> sample_randomization(const RandomizationConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<RandomizationSample> out;
    for (const auto& e : cfg.entries) {
        const double t = u01(rng);
        double v = e.range.lo + t * (e.range.hi - e.range.lo);
        v = std::clamp(v, e.range.lo, e.range.hi);
        out.push_back({e.name, e.unit, e.scope, v});
    }
    return out;
}

} // namespace tacsim
