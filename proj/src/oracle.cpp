#include "stirapsim/oracle.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "stirapsim/propagator.hpp"

namespace stirapsim {
namespace oracle {

namespace {

void require_lossless(const OpenSystemModel& model) {
    for (const auto& ch : model.collapse_channels())
        if (ch.op.cwiseAbs().maxCoeff() > 0.0)
            throw std::invalid_argument("oracle path requires all decay rates to be zero (channel " +
                                        ch.name + " is active)");
    if (model.cascade() && model.cascade()->strength != 0.0)
        throw std::invalid_argument("oracle path does not handle cascaded dissipation");
}

// One pass with n uniform Magnus steps between consecutive output times.
StateTrajectory run_fixed(const OpenSystemModel& model, const Eigen::VectorXcd& psi0,
                          std::pair<double, double> window, int n_output, int substeps) {
    const double span = window.second - window.first;
    const std::complex<double> im(0.0, 1.0);
    const double gauss_shift = std::sqrt(3.0) / 6.0;

    StateTrajectory traj;
    traj.times.resize(n_output);
    traj.states.reserve(n_output);
    traj.steps_used = substeps * (n_output - 1);

    Eigen::VectorXcd psi = psi0;
    const double norm0 = psi.norm();
    traj.states.push_back(psi);
    traj.times[0] = window.first;
    for (int k = 1; k < n_output; ++k) {
        const double t0 = window.first + span * (k - 1) / (n_output - 1);
        const double t1 = window.first + span * k / (n_output - 1);
        const double dt = (t1 - t0) / substeps;
        for (int s = 0; s < substeps; ++s) {
            const double ta = t0 + s * dt + (0.5 - gauss_shift) * dt;
            const double tb = t0 + s * dt + (0.5 + gauss_shift) * dt;
            const Eigen::MatrixXcd a1 = -im * model.hamiltonian(ta);
            const Eigen::MatrixXcd a2 = -im * model.hamiltonian(tb);
            Eigen::MatrixXcd omega = 0.5 * dt * (a1 + a2);
            omega += (std::sqrt(3.0) / 12.0) * dt * dt * (a2 * a1 - a1 * a2);
            psi = omega.exp() * psi;
        }
        traj.times[k] = t1;
        traj.states.push_back(psi);
        traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(psi.norm() - norm0));
    }
    return traj;
}

double max_population_difference(const StateTrajectory& a, const StateTrajectory& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.states.size(); ++k)
        worst = std::max(worst,
                         (a.states[k].cwiseAbs2() - b.states[k].cwiseAbs2()).cwiseAbs().maxCoeff());
    return worst;
}

}  // namespace

StateTrajectory schrodinger_evolve(const OpenSystemModel& model, const Eigen::VectorXcd& psi0,
                                   std::pair<double, double> window, double tol, int n_output) {
    require_lossless(model);
    if (psi0.size() != model.space().dimension())
        throw std::invalid_argument("initial state dimension mismatch");
    if (!(window.second > window.first))
        throw std::invalid_argument("integration window must have positive length");

    // Start near one step per output sample and refine until populations
    // settle below tol between consecutive refinements.
    int substeps = 2;
    StateTrajectory prev = run_fixed(model, psi0, window, n_output, substeps);
    for (int round = 0; round < 10; ++round) {
        substeps *= 2;
        StateTrajectory fine = run_fixed(model, psi0, window, n_output, substeps);
        if (max_population_difference(prev, fine) < tol) return fine;
        prev = std::move(fine);
    }
    return prev;
}

double compare_with_master_equation(const OpenSystemModel& model, const Eigen::VectorXcd& psi0,
                                    std::pair<double, double> window, double tol, int n_output) {
    StateTrajectory pure = schrodinger_evolve(model, psi0, window, tol, n_output);

    DensityMatrix rho0 = psi0 * psi0.adjoint();
    EvolveOptions opts;
    opts.rel_tol = std::min(tol, 1e-9);
    opts.abs_tol = 1e-13;
    opts.n_output = n_output;
    Trajectory mixed = evolve(model, rho0, window, opts);

    double worst = 0.0;
    for (int k = 0; k < n_output; ++k) {
        const Eigen::VectorXd pop_pure = pure.states[k].cwiseAbs2();
        const Eigen::VectorXd pop_mixed = mixed.states[k].diagonal().real();
        worst = std::max(worst, (pop_pure - pop_mixed).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace oracle
}  // namespace stirapsim
