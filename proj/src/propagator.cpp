#include "stirapsim/propagator.hpp"

#include <boost/numeric/odeint.hpp>
#include <chrono>
#include <complex>

namespace stirapsim {

namespace {

using state_type = std::vector<std::complex<double>>;
namespace odeint = boost::numeric::odeint;

Eigen::Map<const Eigen::MatrixXcd> as_matrix(const state_type& v, int dim) {
    return {v.data(), dim, dim};
}

Eigen::Map<Eigen::MatrixXcd> as_matrix(state_type& v, int dim) {
    return {v.data(), dim, dim};
}

// Lindblad right-hand side with preallocated scratch space.  One instance
// per evolve() call; not shared across threads.
class MasterEquationRhs {
  public:
    explicit MasterEquationRhs(const OpenSystemModel& model)
        : model_(model), dim_(model.space().dimension()) {
        for (const auto& ch : model.collapse_channels()) {
            if (ch.op.cwiseAbs().maxCoeff() == 0.0) continue;  // zero-rate channel
            ops_.push_back(ch.op);
            norm_ops_.push_back(ch.op.adjoint() * ch.op);
        }
        if (model.cascade()) {
            const auto& link = *model.cascade();
            cascade_strength_ = link.strength;
            a_s_ = link.a_sender;
            a_r_ = link.a_receiver;
            ar_dag_as_ = a_r_.adjoint() * a_s_;
        }
        scratch_.resize(dim_, dim_);
    }

    long evaluations() const { return evaluations_; }

    void operator()(const state_type& x, state_type& dxdt, double t) {
        ++evaluations_;
        auto rho = as_matrix(x, dim_);
        dxdt.resize(x.size());
        auto out = as_matrix(dxdt, dim_);

        const Eigen::MatrixXcd h = model_.hamiltonian(t);
        const std::complex<double> im(0.0, 1.0);
        out = -im * (h * rho - rho * h);
        for (std::size_t k = 0; k < ops_.size(); ++k) {
            scratch_.noalias() = ops_[k] * rho * ops_[k].adjoint();
            scratch_.noalias() -= 0.5 * (norm_ops_[k] * rho + rho * norm_ops_[k]);
            out += scratch_;
        }
        if (cascade_strength_ != 0.0) {
            // -2k ( a_r^dag a_s rho - a_s rho a_r^dag + rho a_s^dag a_r - a_r rho a_s^dag )
            scratch_.noalias() = ar_dag_as_ * rho;
            scratch_.noalias() += rho * ar_dag_as_.adjoint();
            scratch_.noalias() -= a_s_ * rho * a_r_.adjoint();
            scratch_.noalias() -= a_r_ * rho * a_s_.adjoint();
            out -= cascade_strength_ * scratch_;
        }
    }

  private:
    const OpenSystemModel& model_;
    int dim_;
    std::vector<Eigen::MatrixXcd> ops_;
    std::vector<Eigen::MatrixXcd> norm_ops_;
    Eigen::MatrixXcd a_s_, a_r_, ar_dag_as_;
    double cascade_strength_ = 0.0;
    Eigen::MatrixXcd scratch_;
    long evaluations_ = 0;
};

}  // namespace

void validate_density_matrix(const DensityMatrix& rho) {
    if (rho.rows() != rho.cols()) throw std::invalid_argument("density matrix must be square");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("density matrix is not Hermitian within 1e-10");
    if (std::abs(rho.trace().real() - 1.0) > 1e-8 || std::abs(rho.trace().imag()) > 1e-8)
        throw std::invalid_argument("density matrix trace deviates from 1 beyond 1e-8");
}

DensityMatrix rhs(const OpenSystemModel& model, double t, const DensityMatrix& rho) {
    const int dim = model.space().dimension();
    if (rho.rows() != dim || rho.cols() != dim)
        throw std::invalid_argument("density matrix dimension mismatch");
    MasterEquationRhs f(model);
    state_type x(dim * dim), dxdt(dim * dim);
    as_matrix(x, dim) = rho;
    f(x, dxdt, t);
    return Eigen::MatrixXcd(as_matrix(dxdt, dim));
}

DensityMatrix pure_state(const StateSpace& space, int index) {
    DensityMatrix rho = DensityMatrix::Zero(space.dimension(), space.dimension());
    rho(index, index) = 1.0;
    return rho;
}

Trajectory evolve(const OpenSystemModel& model, const DensityMatrix& rho0,
                  std::pair<double, double> window, const EvolveOptions& opts) {
    validate_density_matrix(rho0);
    const int dim = model.space().dimension();
    if (rho0.rows() != dim) throw std::invalid_argument("initial state dimension mismatch");
    if (!(window.second > window.first))
        throw std::invalid_argument("integration window must have positive length");
    if (opts.n_output < 2) throw std::invalid_argument("n_output must be at least 2");

    const auto wall_start = std::chrono::steady_clock::now();
    MasterEquationRhs f(model);
    auto stepper = odeint::make_controlled(opts.abs_tol, opts.rel_tol,
                                           odeint::runge_kutta_dopri5<state_type>());

    Trajectory traj;
    traj.times.resize(opts.n_output);
    traj.states.reserve(opts.n_output);

    state_type x(dim * dim);
    as_matrix(x, dim) = rho0;
    const double span = window.second - window.first;
    double dt = span / (10.0 * opts.n_output);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig;
    traj.stats.min_eigenvalue = 1.0;
    for (int k = 0; k < opts.n_output; ++k) {
        const double t_k = window.first + span * k / (opts.n_output - 1);
        traj.times[k] = t_k;
        if (k > 0) {
            const double t_prev = traj.times[k - 1];
            try {
                odeint::integrate_adaptive(stepper, std::ref(f), x, t_prev, t_k, dt);
            } catch (const std::exception& e) {
                throw PropagationError(std::string("integrator failure: ") + e.what(), t_prev);
            }
        }

        Eigen::MatrixXcd rho = as_matrix(x, dim);
        const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
        traj.stats.max_hermiticity_drift = std::max(traj.stats.max_hermiticity_drift, herm);
        const double trace_dev = std::abs(rho.trace() - std::complex<double>(1.0, 0.0));
        traj.stats.max_trace_deviation = std::max(traj.stats.max_trace_deviation, trace_dev);
        if (opts.resymmetrize) {
            rho = 0.5 * (rho + rho.adjoint()).eval();
            as_matrix(x, dim) = rho;
            traj.stats.resymmetrized = true;
        }
        if (opts.monitor_eigenvalues) {
            eig.compute(rho, Eigen::EigenvaluesOnly);
            traj.stats.min_eigenvalue =
                std::min(traj.stats.min_eigenvalue, eig.eigenvalues().minCoeff());
        }
        traj.states.push_back(std::move(rho));
    }
    traj.stats.positivity_warning = traj.stats.min_eigenvalue < -1e-6;
    traj.stats.rhs_evaluations = f.evaluations();
    traj.stats.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall_start)
            .count();
    return traj;
}

}  // namespace stirapsim
