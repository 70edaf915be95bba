#include "tacsim/tacalign.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

namespace tacsim {

namespace {

double reflect01(double v) {
    v = std::fmod(std::abs(v), 2.0);
    return v > 1.0 ? 2.0 - v : v;
}

void evaluate_population(const std::function<double(const VecX&)>& f, const std::vector<VecX>& xs,
                         std::vector<double>& out, int workers) {
    out.assign(xs.size(), std::numeric_limits<double>::infinity());
    auto eval = [&](std::size_t i) {
        double v;
        try {
            v = f(xs[i]);
        } catch (const std::exception&) {
            v = std::numeric_limits<double>::infinity();
        }
        out[i] = std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    const std::size_t w = static_cast<std::size_t>(std::max(1, std::min<int>(workers, static_cast<int>(xs.size()))));
    if (w == 1) {
        for (std::size_t i = 0; i < xs.size(); ++i) eval(i);
        return;
    }
    // Fixed strided assignment: each slot is written by exactly one thread.
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < xs.size(); i += w) eval(i);
        });
    for (auto& th : pool) th.join();
}

} // namespace

CmaesResult cmaes_minimize(const std::function<double(const VecX&)>& f, const VecX& lo, const VecX& hi,
                           const CmaesOptions& opt) {
    const int n = static_cast<int>(lo.size());
    if (n < 1 || hi.size() != lo.size()) throw InvalidArgument("cmaes: bounds must be non-empty and equal length");
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !(lo[i] < hi[i]))
            throw InvalidArgument("cmaes: bound " + std::to_string(i) + " must be finite with lo < hi");
    }
    if (opt.popsize < 2) throw InvalidArgument("cmaes: popsize must be >= 2");
    if (opt.iters < 1) throw InvalidArgument("cmaes: iters must be >= 1");
    if (!(opt.sigma0 > 0)) throw InvalidArgument("cmaes: sigma0 must be positive");

    auto denorm = [&](const VecX& y) -> VecX { return lo + (hi - lo).cwiseProduct(y); };

    const int lambda = opt.popsize, mu = lambda / 2;
    VecX w(mu);
    for (int i = 0; i < mu; ++i) w[i] = std::log(mu + 0.5) - std::log(i + 1.0);
    w /= w.sum();
    const double mueff = 1.0 / w.squaredNorm();
    const double cs = (mueff + 2.0) / (n + mueff + 5.0);
    const double ds = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs;
    const double cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n);
    const double c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mueff);
    const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) * (n + 2.0) + mueff));
    const double chin = std::sqrt(static_cast<double>(n)) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    VecX m = opt.x0.size() == n ? opt.x0 : VecX::Constant(n, 0.5);
    for (int i = 0; i < n; ++i) m[i] = reflect01(m[i]);
    double sigma = opt.sigma0;
    Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n, n), B = C;
    VecX D = VecX::Ones(n), ps = VecX::Zero(n), pc = VecX::Zero(n);

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    CmaesResult res;
    res.x_best = denorm(m);
    std::vector<VecX> ys(static_cast<std::size_t>(lambda)), xs(static_cast<std::size_t>(lambda));
    std::vector<double> fit;
    for (int gen = 0; gen < opt.iters; ++gen) {
        for (int k = 0; k < lambda; ++k) {
            VecX z(n);
            for (int i = 0; i < n; ++i) z[i] = normal(rng);
            VecX y = m + sigma * (B * D.asDiagonal() * z);
            for (int i = 0; i < n; ++i) y[i] = reflect01(y[i]);
            ys[static_cast<std::size_t>(k)] = y;
            xs[static_cast<std::size_t>(k)] = denorm(y);
        }
        evaluate_population(f, xs, fit, opt.workers);
        res.evaluations += lambda;

        std::vector<int> order(static_cast<std::size_t>(lambda));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fit[a] < fit[b]; });
        if (fit[order[0]] < res.f_best) {
            res.f_best = fit[order[0]];
            res.x_best = xs[static_cast<std::size_t>(order[0])];
        }
        res.loss_history.push_back(res.f_best);
        if (res.f_best <= opt.ftarget) break;

        const VecX m_old = m;
        m.setZero();
        for (int i = 0; i < mu; ++i) m += w[i] * ys[static_cast<std::size_t>(order[i])];
        const VecX step = (m - m_old) / sigma;
        const VecX cinv_step = B * D.cwiseInverse().asDiagonal() * B.transpose() * step;
        ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * cinv_step;
        const double hs_den = std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * (gen + 1)));
        const bool hs = ps.norm() / hs_den < (1.4 + 2.0 / (n + 1.0)) * chin;
        pc = (1.0 - cc) * pc + (hs ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * step;
        Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < mu; ++i) {
            const VecX yi = (ys[static_cast<std::size_t>(order[i])] - m_old) / sigma;
            rank_mu += w[i] * yi * yi.transpose();
        }
        C = (1.0 - c1 - cmu) * C + c1 * (pc * pc.transpose() + (hs ? 0.0 : cc * (2.0 - cc)) * C) + cmu * rank_mu;
        C = 0.5 * (C + C.transpose());
        sigma *= std::exp((cs / ds) * (ps.norm() / chin - 1.0));
        sigma = std::min(sigma, 1.0);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
        B = eig.eigenvectors();
        D = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt();
    }
    return res;
}

// ---------------------------------------------------------------------------

VecX material_to_theta(const Material& m) { return (VecX(4) << m.E, m.nu, m.rho, m.mu_f).finished(); }

Material theta_to_material(const VecX& t) {
    if (t.size() != 4) throw InvalidArgument("material parameters need 4 entries (E, nu, rho, mu)");
    Material m;
    m.E = t[0];
    m.nu = t[1];
    m.rho = t[2];
    m.mu_f = t[3];
    return m;
}

void CalibrationProblem::validate() const {
    if (lo.size() != 4 || hi.size() != 4) throw InvalidArgument("calibration: bounds need 4 entries");
    for (int i = 0; i < 4; ++i)
        if (!(lo[i] < hi[i])) throw InvalidArgument("calibration: bound " + std::to_string(i) + " has lo >= hi");
    if (reference.empty()) throw InvalidArgument("calibration: empty reference");
    if (!simulate) throw InvalidArgument("calibration: no simulator");
}

double calibration_loss(const CalibrationProblem& prob, const Material& m) {
    try {
        m.validate();
        return field_mse(prob.simulate(m), prob.reference);
    } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
    }
}

CalibrationResult calibrate_material(const CalibrationProblem& prob, const CmaesOptions& opt) {
    prob.validate();
    auto r = cmaes_minimize([&](const VecX& th) { return calibration_loss(prob, theta_to_material(th)); }, prob.lo,
                            prob.hi, opt);
    CalibrationResult out;
    out.theta_star = r.x_best;
    out.material = theta_to_material(r.x_best);
    out.loss = r.f_best;
    out.loss_history = r.loss_history;
    out.evaluations = r.evaluations;
    return out;
}

} // namespace tacsim
