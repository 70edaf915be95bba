#include "tacsim/solver.hpp"

#include <algorithm>
#include <cmath>

namespace tacsim {

void SolverConfig::validate() const {
    if (!(h > 0)) throw InvalidArgument("SolverConfig: h must be > 0");
    if (max_iters < 1) throw InvalidArgument("SolverConfig: max_iters must be >= 1");
    if (!(tol_dx > 0)) throw InvalidArgument("SolverConfig: tol_dx must be > 0");
    if (max_substeps < 1) throw InvalidArgument("SolverConfig: max_substeps must be >= 1");
    barrier.validate();
    friction.validate();
}

RigidPose interpolate(const RigidPose& a, const RigidPose& b, double s) {
    RigidPose r;
    r.position = (1.0 - s) * a.position + s * b.position;
    r.orientation = a.orientation.slerp(s, b.orientation).normalized();
    return r;
}

void RigidScript::validate() const {
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& f = frames[i];
        if (!f.pose.position.allFinite() || std::abs(f.pose.orientation.norm() - 1.0) > 1e-6)
            throw InvalidArgument("RigidScript: frame " + std::to_string(i) + " has an invalid pose");
        if (i > 0 && !(f.time > frames[i - 1].time))
            throw InvalidArgument("RigidScript: timestamps not strictly increasing at frame " + std::to_string(i));
    }
}

VecX dk_direction(const VecX& g, const VecX& g_prev, const VecX& p_prev, const Preconditioner& P, bool first) {
    const VecX Pg = P(g);
    if (first) return -Pg;
    const VecX y = g - g_prev;
    const double yp = y.dot(p_prev);
    const double scale = y.norm() * p_prev.norm();
    if (!(std::abs(yp) > 1e-30 * scale)) return -Pg;
    const double beta = Pg.dot(y) / yp - (y.dot(P(y)) / yp) * (p_prev.dot(g) / yp);
    return -Pg + beta * p_prev;
}

VecX dk_direction(const VecX& g, const VecX& g_prev, const VecX& p_prev, const VecX& P, bool first) {
    return dk_direction(g, g_prev, p_prev, Preconditioner([&P](const VecX& v) -> VecX { return P.cwiseProduct(v); }),
                        first);
}

double step_size(const VecX& g, const VecX& p, double quadform, double dhat) {
    const double pinf = p.lpNorm<Eigen::Infinity>();
    if (pinf == 0.0) return 0.0;
    double upper = dhat / (2.0 * pinf);
    while (upper * pinf > 0.5 * dhat) upper = std::nextafter(upper, 0.0);
    if (!(quadform > 0)) return upper;
    return std::min(upper, -g.dot(p) / quadform);
}

// ---------------------------------------------------------------------------

struct ContactSimulator::StepContext {
    VecX x_t;
    VecX xhat;
    RigidPose pose_from, pose_to;
    CollisionMesh gel_cm, rigid_cm;
    std::vector<Candidate> cands, self_cands;
    std::vector<std::array<int, 4>> cand_ids;
    std::vector<char> cand_split; ///< number of leading ids on the first side (1 or 2)
    VecX x_build;
    double radius = 0.0;
    ContactSet friction;
};

struct ContactSimulator::Evaluation {
    double value = 0.0;
    VecX g;
    VecX diag;
    std::vector<ContactEval> contacts;
    std::vector<Mat3> blocks;
};

namespace {

double pose_travel(const RigidPose& a, const RigidPose& b, double r_max) {
    const double angle = a.orientation.angularDistance(b.orientation);
    return (b.position - a.position).norm() + angle * r_max;
}

void append_evals(std::vector<ContactEval>& out, const ContactSet& set) {
    for (const auto& p : set.pairs) {
        ContactEval ev;
        ev.ids = p.ids;
        ev.cp.distance = p.d;
        ev.cp.normal = p.normal;
        ev.cp.weights = p.anchor;
        for (double w : p.anchor) ev.cp.active += (w != 0.0);
        out.push_back(ev);
    }
}

} // namespace

ContactSimulator::ContactSimulator(TetMesh gel, SurfaceMesh indenter, Material mat, SolverConfig cfg)
    : gel_(std::move(gel)), indenter_(std::move(indenter)), mat_(mat), cfg_(cfg) {
    mat_.validate();
    cfg_.friction.mu_f = mat_.mu_f;
    cfg_.validate();
    if (gel_.tets.empty()) throw InvalidArgument("ContactSimulator: empty gel mesh");
    require_watertight(indenter_);
    surface_ = extract_surface(gel_);
    const int ng = num_gel_vertices();
    const int nr = static_cast<int>(indenter_.vertices.size());
    masses_ = VecX::Zero(ng + nr);
    masses_.head(ng) = lumped_masses(gel_, mat_.rho);
    free_.assign(3 * static_cast<std::size_t>(ng + nr), 0);
    const auto fixed = gel_.dirichlet_mask();
    for (int i = 0; i < ng; ++i) {
        if (!fixed[i]) free_[3 * i] = free_[3 * i + 1] = free_[3 * i + 2] = 1;
    }
    for (const auto& v : indenter_.vertices) rigid_radius_ = std::max(rigid_radius_, v.norm());
}

VecX ContactSimulator::rigid_positions(const RigidPose& pose) const {
    VecX r(3 * indenter_.vertices.size());
    for (std::size_t i = 0; i < indenter_.vertices.size(); ++i) r.segment<3>(3 * i) = pose.apply(indenter_.vertices[i]);
    return r;
}

SimState ContactSimulator::rest_state(const RigidPose& pose) const {
    SimState s;
    const int ng = num_gel_vertices();
    s.x.resize(masses_.size() * 3);
    s.x.head(3 * ng) = flatten(gel_.vertices);
    s.x.tail(3 * indenter_.vertices.size()) = rigid_positions(pose);
    s.v = VecX::Zero(s.x.size());
    s.pose = pose;
    return s;
}

int ContactSimulator::substeps_between(const RigidPose& a, const RigidPose& b) const {
    const double travel = pose_travel(a, b, rigid_radius_);
    const double limit = 0.5 * cfg_.barrier.dhat;
    return std::max(1, static_cast<int>(std::ceil(travel / limit - 1e-9)));
}

ContactSimulator::StepContext ContactSimulator::make_context(const SimState& start, const RigidPose& target) const {
    StepContext ctx;
    const int ng = num_gel_vertices();
    ctx.x_t = start.x;
    ctx.xhat = start.x + cfg_.h * start.v;
    if (cfg_.gravity) {
        for (int i = 0; i < ng; ++i) {
            if (free_[3 * i]) ctx.xhat.segment<3>(3 * i) += cfg_.h * cfg_.h * cfg_.gravity_accel;
        }
    }
    ctx.pose_from = start.pose;
    ctx.pose_to = target;
    ctx.gel_cm = CollisionMesh{&surface_, 0, 0};
    ctx.rigid_cm = CollisionMesh{&indenter_, ng, 1};
    const double dhat = cfg_.barrier.dhat;
    const auto near = broad_phase(ctx.gel_cm, ctx.rigid_cm, start.x, dhat);
    ctx.friction = build_friction_anchors(narrow_phase(near, ctx.gel_cm, ctx.rigid_cm, start.x, dhat), start.x,
                                          cfg_.barrier);
    ctx.radius = 2.0 * dhat + 2.0 * pose_travel(start.pose, target, rigid_radius_);
    return ctx;
}

void ContactSimulator::build_candidates(StepContext& ctx, const VecX& x) const {
    ctx.cands = broad_phase(ctx.gel_cm, ctx.rigid_cm, x, ctx.radius);
    if (cfg_.self_contact) ctx.self_cands = broad_phase_self(ctx.gel_cm, x, ctx.radius);
    ctx.x_build = x;
    ctx.cand_ids.clear();
    ctx.cand_split.clear();
    for (const auto& c : ctx.cands) {
        ctx.cand_ids.push_back(evaluate_candidate(c, ctx.gel_cm, ctx.rigid_cm, x).ids);
        ctx.cand_split.push_back(c.kind == ContactKind::PointTriangle ? 1 : 2);
    }
    for (const auto& c : ctx.self_cands) {
        ctx.cand_ids.push_back(evaluate_candidate(c, ctx.gel_cm, ctx.gel_cm, x).ids);
        ctx.cand_split.push_back(c.kind == ContactKind::PointTriangle ? 1 : 2);
    }
}

bool ContactSimulator::contact_distances(const StepContext& ctx, const VecX& x, std::vector<double>& d) const {
    d.clear();
    bool ok = true;
    for (const auto& c : ctx.cands) {
        d.push_back(evaluate_candidate(c, ctx.gel_cm, ctx.rigid_cm, x).cp.distance);
        ok = ok && d.back() > 0;
    }
    for (const auto& c : ctx.self_cands) {
        d.push_back(evaluate_candidate(c, ctx.gel_cm, ctx.gel_cm, x).cp.distance);
        ok = ok && d.back() > 0;
    }
    return ok;
}

ContactSimulator::Evaluation ContactSimulator::evaluate(const StepContext& ctx, const VecX& x) const {
    Evaluation ev;
    const double dhat = cfg_.barrier.dhat;
    append_evals(ev.contacts, narrow_phase(ctx.cands, ctx.gel_cm, ctx.rigid_cm, x, dhat));
    if (cfg_.self_contact) append_evals(ev.contacts, narrow_phase(ctx.self_cands, ctx.gel_cm, ctx.gel_cm, x, dhat));

    EnergyReport total = inertia_energy(x, ctx.xhat, masses_, cfg_.h);
    total += elastic_energy(gel_, x, mat_, cfg_.h);
    // kappa is a physical stiffness and lambda_n a force, so contact terms
    // enter the incremental potential with the same h^2 as the elastic term.
    const double h2 = cfg_.h * cfg_.h;
    EnergyReport contact = barrier_energy(ev.contacts, x.size(), cfg_.barrier);
    contact += friction_energy(ctx.friction, x, ctx.x_t, cfg_.friction);
    contact *= h2;
    total += contact;
    ev.value = total.value;
    ev.g = std::move(total.gradient);
    ev.diag = std::move(total.diag_hessian);
    ev.blocks = std::move(total.blocks);
    for (Eigen::Index i = 0; i < ev.g.size(); ++i) {
        if (!free_[i]) ev.g[i] = ev.diag[i] = 0.0;
    }
    return ev;
}

double ContactSimulator::step_objective(const SimState& start, const RigidPose& target, const VecX& x) const {
    StepContext ctx = make_context(start, target);
    ctx.radius = cfg_.barrier.dhat;
    build_candidates(ctx, x);
    std::vector<double> d;
    if (!contact_distances(ctx, x, d)) return std::numeric_limits<double>::infinity();
    return evaluate(ctx, x).value;
}

StepStats ContactSimulator::step(SimState& state, const RigidPose& target) const {
    StepStats stats;
    StepContext ctx = make_context(state, target);
    const int ng = num_gel_vertices();
    const Eigen::Index nr3 = static_cast<Eigen::Index>(3 * indenter_.vertices.size());
    const double dhat = cfg_.barrier.dhat;

    VecX x = state.x;
    build_candidates(ctx, x);
    std::vector<double> d_cur, d_try;
    if (!contact_distances(ctx, x, d_cur)) throw FeasibilityError("step: infeasible start state");

    auto gel_shift = [&](const VecX& a, const VecX& b) {
        double m = 0.0;
        for (int i = 0; i < ng; ++i) m = std::max(m, (a.segment<3>(3 * i) - b.segment<3>(3 * i)).norm());
        return m;
    };
    auto rigid_shift = [&](const VecX& a, const VecX& b) {
        double m = 0.0;
        for (Eigen::Index i = 3 * ng; i < a.size(); i += 3) m = std::max(m, (a.segment<3>(i) - b.segment<3>(i)).norm());
        return m;
    };
    // Conservative motion filter: along the straight path from `current` to
    // `trial`, a pair's distance drops by at most the largest motion on each
    // side, so keeping that sum below 90% of the current distance rules out
    // tunneling. Pairs outside the candidate list stay beyond dhat via the
    // hash radius margin.
    std::vector<double> motion;
    auto admissible = [&](const VecX& current, const VecX& trial) {
        if (gel_shift(trial, ctx.x_build) + rigid_shift(trial, ctx.x_build) >= ctx.radius - dhat) {
            build_candidates(ctx, current);
            contact_distances(ctx, current, d_cur);
            if (gel_shift(trial, current) + rigid_shift(trial, current) >= ctx.radius - dhat) return false;
        }
        motion.resize(static_cast<std::size_t>(trial.size() / 3));
        for (std::size_t i = 0; i < motion.size(); ++i)
            motion[i] = (trial.segment<3>(3 * i) - current.segment<3>(3 * i)).norm();
        for (std::size_t c = 0; c < ctx.cand_ids.size(); ++c) {
            const auto& ids = ctx.cand_ids[c];
            double ma = 0.0, mb = 0.0;
            for (int k = 0; k < 4; ++k) (k < ctx.cand_split[c] ? ma : mb) = std::max(k < ctx.cand_split[c] ? ma : mb, motion[ids[k]]);
            if (1.001 * (ma + mb) > 0.9 * d_cur[c]) return false;
        }
        return contact_distances(ctx, trial, d_try);
    };

    double tau = 0.0;
    auto advance_rigid = [&]() {
        double dt = 1.0 - tau;
        for (int k = 0; k < 40 && dt > 0; ++k, dt *= 0.5) {
            const double next = k == 0 ? 1.0 : tau + dt;
            VecX trial = x;
            trial.tail(nr3) = rigid_positions(interpolate(ctx.pose_from, ctx.pose_to, next));
            if (admissible(x, trial)) {
                x = std::move(trial);
                std::swap(d_cur, d_try);
                tau = next;
                return true;
            }
        }
        return false;
    };

    advance_rigid();
    Evaluation cur = evaluate(ctx, x);
    if (tau >= 1.0) stats.energy_start = cur.value;

    VecX g_prev = VecX::Zero(x.size()), p_prev = VecX::Zero(x.size()), P(x.size());
    std::vector<Mat3> Pinv(static_cast<std::size_t>(x.size() / 3));
    const Preconditioner apply_P = [&Pinv](const VecX& r) -> VecX {
        VecX out(r.size());
        for (std::size_t v = 0; v < Pinv.size(); ++v) out.segment<3>(3 * v) = Pinv[v] * r.segment<3>(3 * v);
        return out;
    };
    bool first = true;
    const int hard_cap = 10 * cfg_.max_iters;
    int it = 0;
    while (true) {
        if (tau >= 1.0 && it >= cfg_.max_iters) break;
        if (it >= hard_cap) throw SolverError("step: indenter could not reach its target pose");
        ++it;
        // Per-vertex 3x3 block Jacobi; pinned vertices get a zero block.
        for (std::size_t v = 0; v < Pinv.size(); ++v) {
            Pinv[v] = free_[3 * v] ? Mat3(cur.blocks[v].inverse()) : Mat3::Zero();
            P.segment<3>(3 * v) = Pinv[v].diagonal();
        }
        VecX p = dk_direction(cur.g, g_prev, p_prev, apply_P, first);
        if (!(cur.g.dot(p) < 0)) {
            if (!first) ++stats.restarts;
            p = -apply_P(cur.g);
        }
        double alpha = 0.0;
        bool accepted = false;
        Evaluation next;
        VecX trial;
        if (p.lpNorm<Eigen::Infinity>() > 0) {
            const double qf = inertia_quadform(masses_, p) + elastic_quadform(gel_, x, mat_, cfg_.h, p) +
                              cfg_.h * cfg_.h *
                                  (barrier_quadform(cur.contacts, x, p, cfg_.barrier) +
                                   friction_quadform(ctx.friction, x, ctx.x_t, cfg_.friction, p));
            alpha = step_size(cur.g, p, qf, dhat);
            // Backtrack on infeasibility or energy increase; each halving keeps
            // the step inside the dhat/2 bound.
            for (int k = 0; k < 40; ++k, alpha *= 0.5) {
                trial = x + alpha * p;
                if (!admissible(x, trial)) continue;
                next = evaluate(ctx, trial);
                if (next.value <= cur.value + 1e-13 * std::abs(cur.value)) {
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted && !first) {
            // CG direction failed the line search: retry along -P g before
            // treating the iterate as stationary.
            first = true;
            ++stats.restarts;
            continue;
        }
        const double step_norm = accepted ? alpha * p.lpNorm<Eigen::Infinity>() : 0.0;
        stats.step_norms.push_back(step_norm);
        if (accepted) {
            g_prev = cur.g;
            p_prev = p;
            first = false;
            x = std::move(trial);
            std::swap(d_cur, d_try);
            cur = std::move(next);
        }
        if (tau < 1.0) {
            if (advance_rigid()) {
                cur = evaluate(ctx, x);
                first = true;
                if (tau >= 1.0) stats.energy_start = cur.value;
            }
            continue;
        }
        if (step_norm < cfg_.tol_dx) {
            stats.converged = true;
            break;
        }
    }
    stats.iterations = it;
    stats.energy_end = cur.value;
    stats.grad_norm = cur.g.norm();
    stats.active_contacts = static_cast<int>(cur.contacts.size());

    // Independent verification with a fresh broad phase at the result.
    const double verify_radius = 2.0 * dhat;
    const auto fresh = broad_phase(ctx.gel_cm, ctx.rigid_cm, x, verify_radius);
    const double dmin = min_distance(fresh, ctx.gel_cm, ctx.rigid_cm, x);
    if (!(dmin > 0) || surfaces_intersect(ctx.gel_cm, ctx.rigid_cm, x))
        throw FeasibilityError("step: intersection after solve at t = " + std::to_string(state.t + cfg_.h) +
                               " (min distance " + std::to_string(dmin) + ")");
    stats.min_distance = std::min(dmin, verify_radius);

    state.v = (x - state.x) / cfg_.h;
    state.x = std::move(x);
    state.t += cfg_.h;
    state.pose = target;
    state.scratch.g = cur.g;
    state.scratch.g_prev = g_prev;
    state.scratch.p = p_prev;
    state.scratch.y = cur.g - g_prev;
    state.scratch.P = P;
    return stats;
}

std::vector<SimState> ContactSimulator::simulate_sequence(const SimState& initial, const RigidScript& script,
                                                          std::vector<StepStats>* stats,
                                                          const StepObserver& observer) const {
    script.validate();
    std::vector<SimState> out;
    if (script.frames.empty()) {
        out.push_back(initial);
        return out;
    }
    SimState s = initial;
    for (std::size_t f = 0; f < script.frames.size(); ++f) {
        const RigidPose from = s.pose;
        const RigidPose& to = script.frames[f].pose;
        const int n = substeps_between(from, to);
        if (n > cfg_.max_substeps)
            throw InvalidArgument("simulate_sequence: frame " + std::to_string(f) + " jumps too far (" +
                                  std::to_string(n) + " substeps needed)");
        for (int j = 1; j <= n; ++j) {
            const RigidPose prev = s.pose;
            auto st = step(s, interpolate(from, to, static_cast<double>(j) / n));
            if (stats) stats->push_back(std::move(st));
            if (observer) {
                Twist tw;
                tw.head<3>() = (s.pose.position - prev.position) / cfg_.h;
                const Eigen::AngleAxisd aa(s.pose.orientation * prev.orientation.inverse());
                tw.tail<3>() = aa.axis() * aa.angle() / cfg_.h;
                observer(s.pose, tw);
            }
        }
        out.push_back(s);
    }
    return out;
}

} // namespace tacsim
