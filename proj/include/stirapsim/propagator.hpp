#pragma once

// Master-equation integration.  The right-hand side is the Lindblad form
// plus, when the model carries a cavity-to-cavity link, the unidirectional
// coupling term written exactly as
//   -2k ( [a_r^dag, a_s rho] + [rho a_s^dag, a_r] ).
// Dense matrices throughout; the spaces never exceed a dozen states.

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "stirapsim/model_builder.hpp"

namespace stirapsim {

using DensityMatrix = Eigen::MatrixXcd;

/// Raised when the adaptive integrator cannot proceed.
class PropagationError : public std::runtime_error {
  public:
    PropagationError(const std::string& what, double t_fail)
        : std::runtime_error(what + " at t = " + std::to_string(t_fail) + " us"), t(t_fail) {}
    double t;
};

struct IntegratorStats {
    long rhs_evaluations = 0;
    double max_trace_deviation = 0.0;   // max |tr rho - 1| over output samples
    double max_hermiticity_drift = 0.0; // max element of |rho - rho^dag| before re-projection
    double min_eigenvalue = 0.0;        // monitored, not enforced
    bool positivity_warning = false;    // min eigenvalue < -1e-6 somewhere
    bool resymmetrized = false;
    double wall_time_ms = 0.0;
};

struct Trajectory {
    std::vector<double> times;          // us, strictly increasing uniform grid
    std::vector<DensityMatrix> states;  // one per time
    IntegratorStats stats;

    int samples() const { return static_cast<int>(times.size()); }
};

struct EvolveOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    int n_output = 2000;
    bool resymmetrize = true;  // Hermitian re-projection at output samples only
    bool monitor_eigenvalues = true;
};

/// Checks the DensityMatrix invariants (Hermitian to 1e-10, unit trace to
/// 1e-8); throws std::invalid_argument on violation.
void validate_density_matrix(const DensityMatrix& rho);

/// d(rho)/dt at time t: commutator, dissipators, optional cascade term.
DensityMatrix rhs(const OpenSystemModel& model, double t, const DensityMatrix& rho);

/// Adaptive Dormand-Prince 5(4) propagation over [window.first,
/// window.second], sampled on a uniform n_output grid.
Trajectory evolve(const OpenSystemModel& model, const DensityMatrix& rho0,
                  std::pair<double, double> window, const EvolveOptions& opts = {});

/// Projector onto a single basis state as an initial condition.
DensityMatrix pure_state(const StateSpace& space, int index);

}  // namespace stirapsim
