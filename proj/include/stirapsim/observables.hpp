#pragma once

// Everything reported from a trajectory: populations, photon emission
// rates and probabilities, dark-state overlap, node-to-node transfer
// fidelity, two-branch composition, and the wavepacket time-symmetry
// score.

#include <vector>

#include "stirapsim/propagator.hpp"

namespace stirapsim {

/// Population series of one basis state (diagonal element, real part).
std::vector<double> population(const Trajectory& traj, int state_index);

/// Summed population series of every basis state whose fragment level on
/// `node` equals `lvl`.
std::vector<double> level_population(const StateSpace& space, const Trajectory& traj, Level lvl,
                                     int node = 0);

struct EmissionRecord {
    std::vector<double> rate;   // R_emit(t) = 2*kappa * photon population, 1/us
    double probability = 0.0;   // trapezoidal integral of the rate
    double peak_time = 0.0;     // us, parabolic refinement of the grid argmax
    double symmetry = 0.0;      // time-symmetry score in [0, 1]; 0 if no emission
};

/// Emission diagnostics of one cavity mode.
EmissionRecord emission_record(const StateSpace& space, const Trajectory& traj, double kappa,
                               int mode);

/// 1 - integral |R(t_peak+tau) - R(t_peak-tau)| dtau / (2 integral R dt).
/// Throws std::domain_error when the series integrates to zero.
double time_symmetry(const std::vector<double>& times, const std::vector<double>& rate);

/// Instantaneous dark-state overlap <u0(t)| rho(t) |u0(t)> for the branch
/// fed by `mode`.  Where both envelopes are numerically dead the two-level
/// limit convention applies: the initial state before the sequence, the
/// transferred state after it.
std::vector<double> dark_state_overlap(const StateSpace& space, const PulseConfig& pulses,
                                       const Trajectory& traj, int mode);

/// Final receiver-|g2> population of a cascaded trajectory.
double transfer_fidelity(const StateSpace& space, const Trajectory& traj);

/// Per-fragment transfer efficiencies of the two branches of the
/// entangled pair: branch 1 maps (A:g1, B:g2), branch 2 the swap.
struct BranchEfficiencies {
    double a_g1 = 1.0;
    double b_g2 = 1.0;
    double a_g2 = 1.0;
    double b_g1 = 1.0;
};

struct JointFidelity {
    double branch1 = 1.0;   // a_g1 * b_g2
    double branch2 = 1.0;   // a_g2 * b_g1
    double joint = 1.0;     // mean of the branch products
    double min_branch = 1.0;
};

JointFidelity joint_branch_fidelity(const BranchEfficiencies& eff);

/// Emission accounting: P_total + final sink population + final
/// population of the photonless pre-transfer states must close to one.
/// States parked by a photon-leak channel are excluded unless the run
/// started there.
double bookkeeping_defect(const StateSpace& space, const Trajectory& traj,
                          double total_emission_probability, int initial_index);

double trapezoid(const std::vector<double>& times, const std::vector<double>& values);

}  // namespace stirapsim
