#ifndef TACSIM_ENERGY_HPP
#define TACSIM_ENERGY_HPP

#include "tacsim/distance.hpp"
#include "tacsim/geometry.hpp"

namespace tacsim {

/// Gel material, SI units. The four calibrated quantities are E, nu, rho, mu_f.
struct Material {
    double E = 5e4;
    double nu = 0.45;
    double rho = 1000.0;
    double mu_f = 1.0;

    double lame_mu() const { return E / (2.0 * (1.0 + nu)); }
    double lame_lambda() const { return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)); }
    void validate() const;
};

struct BarrierParams {
    double dhat = 1e-4;
    double kappa = 1e5;
    void validate() const;
};

struct FrictionParams {
    double eps_v = 1e-5; ///< per-step tangential displacement threshold (m)
    double mu_f = 1.0;
    void validate() const;
};

/// Value, gradient and diagonal Hessian of one potential over 3N coordinates.
/// blocks holds the per-vertex 3x3 diagonal blocks (positive semidefinite
/// approximations); their diagonals equal diag_hessian.
struct EnergyReport {
    double value = 0.0;
    VecX gradient;
    VecX diag_hessian;
    std::vector<Mat3> blocks;

    explicit EnergyReport(Eigen::Index n = 0)
        : gradient(VecX::Zero(n)), diag_hessian(VecX::Zero(n)), blocks(static_cast<std::size_t>(n / 3), Mat3::Zero()) {}
    EnergyReport& operator+=(const EnergyReport& o);
    EnergyReport& operator*=(double s);
};

/// Per-node lumped masses: a quarter of each incident tet's rest mass.
VecX lumped_masses(const TetMesh& mesh, double rho);

EnergyReport inertia_energy(const VecX& x, const VecX& xhat, const VecX& node_masses, double h);
double inertia_quadform(const VecX& node_masses, const VecX& p);

/// Stable Neo-Hookean energy h^2 * sum_e V_e * Psi(F_e). Inversion-safe.
EnergyReport elastic_energy(const TetMesh& mesh, const VecX& x, const Material& mat, double h);
/// Exact p^T H p of the elastic term (may be negative for indefinite elements).
double elastic_quadform(const TetMesh& mesh, const VecX& x, const Material& mat, double h, const VecX& p);
double stable_neo_hookean_density(const Mat3& F, double mu, double lambda);

struct ScalarJet {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// kappa * b(d) with b(d) = -(d - dhat)^2 ln(d / dhat) on (0, dhat), zero beyond.
/// Throws FeasibilityError for d <= 0.
ScalarJet barrier_term(double d, const BarrierParams& p);

/// C1 mollifier of |s|; returns (f, f').
std::pair<double, double> friction_mollifier(double s, double eps_v);

/// One evaluated contact: closest points plus the global vertex ids they refer to.
struct ContactEval {
    std::array<int, 4> ids{};
    ClosestPoints cp;
};

/// kappa * sum_k b(d_k). Diagonal entries use the Gauss-Newton term kappa b'' (dd/dx)^2.
EnergyReport barrier_energy(const std::vector<ContactEval>& contacts, Eigen::Index n, const BarrierParams& p);
double barrier_quadform(const std::vector<ContactEval>& contacts, const VecX& x, const VecX& p,
                        const BarrierParams& bp);

struct ContactSet;

/// Lagged friction potential mu_f * sum_k lambda_k f(|T_k^T dx_k|) with anchors from the step start.
EnergyReport friction_energy(const ContactSet& contacts, const VecX& x, const VecX& x_t, const FrictionParams& fp);
double friction_quadform(const ContactSet& contacts, const VecX& x, const VecX& x_t, const FrictionParams& fp,
                         const VecX& p);

} // namespace tacsim

#endif
