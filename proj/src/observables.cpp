#include "stirapsim/observables.hpp"

#include <algorithm>
#include <cmath>

namespace stirapsim {

std::vector<double> population(const Trajectory& traj, int state_index) {
    std::vector<double> out(traj.samples());
    for (int k = 0; k < traj.samples(); ++k)
        out[k] = traj.states[k](state_index, state_index).real();
    return out;
}

std::vector<double> level_population(const StateSpace& space, const Trajectory& traj, Level lvl,
                                     int node) {
    std::vector<double> out(traj.samples(), 0.0);
    for (int i = 0; i < space.dimension(); ++i) {
        if (space.state_at(i).levels[node] != lvl) continue;
        for (int k = 0; k < traj.samples(); ++k) out[k] += traj.states[k](i, i).real();
    }
    return out;
}

double trapezoid(const std::vector<double>& times, const std::vector<double>& values) {
    double sum = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k)
        sum += 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
    return sum;
}

namespace {

// Grid argmax with three-point parabolic refinement; earliest time wins ties.
double refined_peak_time(const std::vector<double>& times, const std::vector<double>& values) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k)
        if (values[k] > values[best]) best = k;
    if (best == 0 || best + 1 == values.size()) return times[best];
    const double y0 = values[best - 1], y1 = values[best], y2 = values[best + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    if (denom >= 0.0) return times[best];
    const double shift = 0.5 * (y0 - y2) / denom;
    const double dt = times[best + 1] - times[best];
    return times[best] + shift * dt;
}

double interpolate(const std::vector<double>& times, const std::vector<double>& values, double t) {
    if (t <= times.front() || t >= times.back()) return 0.0;
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times.begin());
    const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    return (1.0 - w) * values[k - 1] + w * values[k];
}

}  // namespace

double time_symmetry(const std::vector<double>& times, const std::vector<double>& rate) {
    const double total = trapezoid(times, rate);
    if (total <= 0.0) throw std::domain_error("time_symmetry: zero total emission");
    const double t_peak = refined_peak_time(times, rate);
    const double tau_max = std::max(t_peak - times.front(), times.back() - t_peak);
    const std::size_t n = 4 * times.size();
    const double dtau = tau_max / static_cast<double>(n);
    double asym = 0.0;
    double prev = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double tau = k * dtau;
        const double cur =
            std::abs(interpolate(times, rate, t_peak + tau) - interpolate(times, rate, t_peak - tau));
        asym += 0.5 * (cur + prev) * dtau;
        prev = cur;
    }
    const double score = 1.0 - asym / (2.0 * total);
    return std::clamp(score, 0.0, 1.0);
}

EmissionRecord emission_record(const StateSpace& space, const Trajectory& traj, double kappa,
                               int mode) {
    EmissionRecord rec;
    rec.rate.assign(traj.samples(), 0.0);
    for (int i = 0; i < space.dimension(); ++i) {
        if (space.state_at(i).photons[mode] != 1) continue;
        for (int k = 0; k < traj.samples(); ++k)
            rec.rate[k] += 2.0 * kappa * traj.states[k](i, i).real();
    }
    rec.probability = trapezoid(traj.times, rec.rate);
    if (rec.probability > 0.0) {
        rec.peak_time = refined_peak_time(traj.times, rec.rate);
        rec.symmetry = time_symmetry(traj.times, rec.rate);
    }
    return rec;
}

std::vector<double> dark_state_overlap(const StateSpace& space, const PulseConfig& pulses,
                                       const Trajectory& traj, int mode) {
    int idx_initial, idx_final;
    if (space.scheme() == Scheme::two_mode_single_node) {
        idx_initial = space.index(mode == 0 ? Level::g1 : Level::g2);
        idx_final = space.index(Level::f, mode);
    } else if (space.scheme() == Scheme::one_mode_single_node) {
        idx_initial = space.index(Level::g2);
        idx_final = space.index(Level::g1, 0);
    } else {
        throw std::invalid_argument("dark-state overlap is defined for single-node schemes");
    }

    const auto [t0, t1] = integration_window(pulses);
    const double t_mid = pulses.center_time + 0.5 * pulses.signed_offset() / pulses.v;
    std::vector<double> out(traj.samples());
    for (int k = 0; k < traj.samples(); ++k) {
        const double t = traj.times[k];
        double theta;
        if (envelopes_dead(pulses, t)) {
            // Two-level limit: before the sequence the dark state is the
            // initial state, after it the transferred state.
            theta = t < t_mid ? 0.0 : std::numbers::pi / 2;
            if (pulses.order == PulseOrder::pump_first) theta = std::numbers::pi / 2 - theta;
        } else {
            theta = mixing_angle(pulses, mode, t);
        }
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        const auto& rho = traj.states[k];
        out[k] = c * c * rho(idx_initial, idx_initial).real() +
                 s * s * rho(idx_final, idx_final).real() +
                 2.0 * c * s * rho(idx_final, idx_initial).real();
    }
    return out;
}

double transfer_fidelity(const StateSpace& space, const Trajectory& traj) {
    if (space.scheme() != Scheme::cascaded)
        throw std::invalid_argument("transfer fidelity is defined for the cascaded scheme");
    const int idx = space.index_joint(Level::g1, Level::g2);
    return traj.states.back()(idx, idx).real();
}

JointFidelity joint_branch_fidelity(const BranchEfficiencies& eff) {
    for (double p : {eff.a_g1, eff.b_g2, eff.a_g2, eff.b_g1})
        if (p < 0.0 || p > 1.0 + 1e-9)
            throw std::invalid_argument("branch efficiencies must lie in [0, 1]");
    JointFidelity out;
    out.branch1 = eff.a_g1 * eff.b_g2;
    out.branch2 = eff.a_g2 * eff.b_g1;
    out.joint = 0.5 * (out.branch1 + out.branch2);
    out.min_branch = std::min(out.branch1, out.branch2);
    return out;
}

double bookkeeping_defect(const StateSpace& space, const Trajectory& traj,
                          double total_emission_probability, int initial_index) {
    // Photonless states fed by a photon-leak channel already show up in
    // the emission probability; counting them again would double-book.
    std::vector<bool> leak_target(space.dimension(), false);
    for (int i = 0; i < space.dimension(); ++i) {
        BasisState s = space.state_at(i);
        for (int m = 0; m < space.mode_count(); ++m) {
            if (s.photons[m] != 1) continue;
            BasisState parked = s;
            parked.photons[m] = 0;
            leak_target[space.index_of(parked)] = true;
        }
    }

    double sum = total_emission_probability;
    const auto& rho_end = traj.states.back();
    for (int i = 0; i < space.dimension(); ++i) {
        const BasisState& s = space.state_at(i);
        const bool is_sink =
            std::any_of(s.levels.begin(), s.levels.begin() + space.node_count(),
                        [](Level l) { return l == Level::sink; });
        if (s.total_photons() != 0) continue;
        if (is_sink) {
            sum += rho_end(i, i).real();
        } else if (!leak_target[i] || i == initial_index) {
            sum += rho_end(i, i).real();
        }
    }
    return std::abs(sum - 1.0);
}

}  // namespace stirapsim
