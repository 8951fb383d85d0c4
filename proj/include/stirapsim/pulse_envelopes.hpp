#pragma once

// Gaussian Rabi-frequency envelopes seen by a fragment crossing the
// cavity and pump beams.  The cavity envelope peaks when the fragment
// crosses the cavity axis; the pump beam is displaced by d along the
// trajectory, downstream for cavity_first order and upstream for
// pump_first (the time-mirrored sequence used at a receiving node).

#include <cmath>
#include <stdexcept>
#include <utility>

namespace stirapsim {

enum class PulseOrder { cavity_first, pump_first };

struct PulseConfig {
    double eta0[2] = {0.0, 0.0};  // peak vacuum Rabi frequency per mode, rad/us
    int n_modes = 1;
    double omega0 = 0.0;  // peak pump Rabi frequency, rad/us
    double w_c = 10.0;    // cavity waist, um
    double w_p = 10.0;    // pump waist, um
    double d = 10.0;      // pump displacement, um (>= 0; direction from `order`)
    double v = 1.0;       // fragment speed sqrt(vx^2+vy^2), um/us
    PulseOrder order = PulseOrder::cavity_first;
    double center_time = 0.0;  // us; cavity-crossing time (receiver sync handle)

    double signed_offset() const { return order == PulseOrder::cavity_first ? d : -d; }
    void validate() const {
        if (!(w_c > 0.0) || !(w_p > 0.0) || !(v > 0.0))
            throw std::invalid_argument("pulse waists and speed must be positive");
        if (d < 0.0)
            throw std::invalid_argument("pulse offset d must be non-negative; use order=pump_first "
                                        "for the mirrored sequence");
    }
};

/// A Gaussian amplitude profile amp * exp(-((t - t_peak)/tau)^2).
struct GaussianShape {
    double amp = 0.0;
    double t_peak = 0.0;  // us
    double tau = 1.0;     // us
    double operator()(double t) const {
        const double x = (t - t_peak) / tau;
        return amp * std::exp(-x * x);
    }
};

GaussianShape eta_shape(const PulseConfig& cfg, int mode);
GaussianShape pump_shape(const PulseConfig& cfg);

/// Cavity-vacuum Rabi frequency eta_i(t), rad/us.
double eta(const PulseConfig& cfg, int mode, double t);

/// Pump Rabi frequency Omega_p(t), rad/us.
double omega_p(const PulseConfig& cfg, double t);

/// [t_start, t_end] covering both envelope peaks plus five waists of the
/// wider beam on each side; both envelopes are below 1e-10 of their peaks
/// at the endpoints.
std::pair<double, double> integration_window(const PulseConfig& cfg);

/// log(Omega_p(t) / eta_mode(t)) evaluated in exponent space, finite for
/// every t even where both envelopes underflow.
double log_pump_to_cavity_ratio(const PulseConfig& cfg, int mode, double t);

/// STIRAP mixing angle theta(t) = atan(Omega_p/eta) in [0, pi/2].
double mixing_angle(const PulseConfig& cfg, int mode, double t);

/// True when both envelopes are below `rel` of their peaks at time t.
bool envelopes_dead(const PulseConfig& cfg, double t, double rel = 1e-12);

}  // namespace stirapsim
