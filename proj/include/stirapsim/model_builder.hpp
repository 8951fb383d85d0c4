#pragma once

// Rotating-frame Hamiltonians and collapse channels for the three
// scenarios.  The frame co-rotates with the Doppler-shifted pump and the
// cavity mode, so optical frequencies cancel exactly; what survives on
// the diagonal is the Doppler detuning on the excited level plus any
// residual one-/two-photon detuning supplied by the configuration (zero
// for the resonant setups).

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "stirapsim/pulse_envelopes.hpp"
#include "stirapsim/quantum_state.hpp"

namespace stirapsim {

/// Which fragment of the dissociated pair this node addresses.  A rides
/// the upper sign of the Doppler phase (detuning -k_p v_x on the excited
/// level), B the lower.
enum class FragmentSign { A, B };

inline double doppler_sign(FragmentSign s) { return s == FragmentSign::A ? -1.0 : 1.0; }

struct TwoModeParams {
    PulseConfig pulses;              // eta0[2], omega0, geometry
    double gamma_e[2] = {0.0, 0.0};  // excited-state decay, rad/us
    double gamma_f = 0.0;            // final-state decay to |l>, rad/us
    double kappa = 0.0;              // cavity field decay, rad/us
    double delta_p[2] = {0.0, 0.0};  // |k_p_i v_x|, rad/us
    FragmentSign fragment = FragmentSign::A;
    double one_photon_detuning[2] = {0.0, 0.0};  // extra diagonal on |e_i>, rad/us
    double two_photon_detuning[2] = {0.0, 0.0};  // diagonal on |f,w_i>, rad/us
};

struct OneModeParams {
    PulseConfig pulses;  // eta0[0], omega0, geometry, order, center_time
    double gamma_e = 0.0;
    double kappa = 0.0;
    double delta_p = 0.0;
    FragmentSign fragment = FragmentSign::A;
    double one_photon_detuning = 0.0;
    double two_photon_detuning = 0.0;
};

struct CascadeParams {
    OneModeParams sender;
    OneModeParams receiver;  // pulses.order must be pump_first
    double kappa_prime = 0.0;  // propagation loss on the link field, rad/us
};

/// A dissipation channel; the rate is folded into the operator amplitude
/// as sqrt(rate).
struct CollapseChannel {
    std::string name;
    Eigen::MatrixXcd op;
};

struct CascadeLink {
    Eigen::MatrixXcd a_sender;
    Eigen::MatrixXcd a_receiver;
    double strength = 0.0;  // 2*kappa for equal-kappa nodes
};

/// Immutable open-system model: H(t) plus collapse channels, optionally a
/// unidirectional cavity-to-cavity link.  hamiltonian(t) is pure; calls
/// at distinct t from different threads are safe.
class OpenSystemModel {
  public:
    struct TimedCoupling {
        Eigen::MatrixXd op_sym;  // real symmetric base, includes the h.c. part
        GaussianShape shape;
    };

    const StateSpace& space() const { return space_; }
    Eigen::MatrixXcd hamiltonian(double t) const;
    const std::vector<CollapseChannel>& collapse_channels() const { return channels_; }
    const std::optional<CascadeLink>& cascade() const { return cascade_; }

    /// Time span covering every pulse sequence in the model (five waists
    /// beyond the outermost peaks).
    std::pair<double, double> default_window() const { return window_; }

    /// Largest Hermiticity residual max|H - H^dag| over `samples` times.
    double hermiticity_residual(int samples = 1000) const;

    const std::vector<TimedCoupling>& couplings() const { return couplings_; }

    static OpenSystemModel assemble(StateSpace space, Eigen::VectorXd static_diag,
                                    std::vector<TimedCoupling> couplings,
                                    std::vector<CollapseChannel> channels,
                                    std::optional<CascadeLink> cascade,
                                    std::pair<double, double> window);

  private:
    StateSpace space_;
    Eigen::VectorXd static_diag_;
    std::vector<TimedCoupling> couplings_;
    std::vector<CollapseChannel> channels_;
    std::optional<CascadeLink> cascade_;
    std::pair<double, double> window_{0.0, 0.0};
};

/// Annihilation operator of one cavity mode restricted to the space.
Eigen::MatrixXcd mode_annihilator(const StateSpace& space, int mode);

OpenSystemModel build_two_mode_model(const TwoModeParams& params);
OpenSystemModel build_one_mode_model(const OneModeParams& params);
OpenSystemModel build_cascaded_model(const CascadeParams& params);

}  // namespace stirapsim
