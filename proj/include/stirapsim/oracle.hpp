#pragma once

// Independent lossless reference path: pure-state propagation of the same
// time-dependent Hamiltonian with a fixed-step fourth-order Magnus
// (exponential) integrator.  Deliberately a different discretization
// family from the adaptive Runge-Kutta master-equation path, so agreement
// between the two is evidence rather than tautology.

#include <Eigen/Dense>
#include <vector>

#include "stirapsim/model_builder.hpp"

namespace stirapsim {
namespace oracle {

struct StateTrajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXcd> states;
    double max_norm_drift = 0.0;
    int steps_used = 0;
};

/// Norm-preserving Schrodinger propagation.  The model must carry no
/// dissipation (all collapse amplitudes zero and no cascade link);
/// otherwise throws std::invalid_argument.
StateTrajectory schrodinger_evolve(const OpenSystemModel& model, const Eigen::VectorXcd& psi0,
                                   std::pair<double, double> window, double tol = 1e-9,
                                   int n_output = 2000);

/// Max over sampled times and basis states of the population discrepancy
/// between the master-equation path and the pure-state path for the same
/// lossless model and initial state.
double compare_with_master_equation(const OpenSystemModel& model, const Eigen::VectorXcd& psi0,
                                    std::pair<double, double> window, double tol = 1e-9,
                                    int n_output = 600);

}  // namespace oracle
}  // namespace stirapsim
