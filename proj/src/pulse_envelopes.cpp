#include "stirapsim/pulse_envelopes.hpp"

#include <algorithm>
#include <numbers>

namespace stirapsim {

GaussianShape eta_shape(const PulseConfig& cfg, int mode) {
    if (mode < 0 || mode >= cfg.n_modes) throw std::out_of_range("pulse mode index");
    return {cfg.eta0[mode], cfg.center_time, cfg.w_c / cfg.v};
}

GaussianShape pump_shape(const PulseConfig& cfg) {
    return {cfg.omega0, cfg.center_time + cfg.signed_offset() / cfg.v, cfg.w_p / cfg.v};
}

double eta(const PulseConfig& cfg, int mode, double t) { return eta_shape(cfg, mode)(t); }

double omega_p(const PulseConfig& cfg, double t) { return pump_shape(cfg)(t); }

std::pair<double, double> integration_window(const PulseConfig& cfg) {
    const double pump_peak = cfg.signed_offset() / cfg.v;
    const double pad = 5.0 * std::max(cfg.w_c, cfg.w_p) / cfg.v;
    return {cfg.center_time + std::min(0.0, pump_peak) - pad,
            cfg.center_time + std::max(0.0, pump_peak) + pad};
}

double log_pump_to_cavity_ratio(const PulseConfig& cfg, int mode, double t) {
    if (mode < 0 || mode >= cfg.n_modes) throw std::out_of_range("pulse mode index");
    const double x = cfg.v * (t - cfg.center_time);
    const double xc = x / cfg.w_c;
    const double xp = (x - cfg.signed_offset()) / cfg.w_p;
    return std::log(cfg.omega0 / cfg.eta0[mode]) + xc * xc - xp * xp;
}

double mixing_angle(const PulseConfig& cfg, int mode, double t) {
    const double lr = log_pump_to_cavity_ratio(cfg, mode, t);
    // atan(exp(lr)) with saturated asymptotes so extreme ratios stay finite.
    if (lr > 40.0) return std::numbers::pi / 2 - std::exp(-lr);
    if (lr < -40.0) return std::exp(lr);
    return std::atan(std::exp(lr));
}

bool envelopes_dead(const PulseConfig& cfg, double t, double rel) {
    const double x = cfg.v * (t - cfg.center_time);
    const double xc = x / cfg.w_c;
    const double xp = (x - cfg.signed_offset()) / cfg.w_p;
    const double log_rel = std::log(rel);
    return (-xc * xc < log_rel) && (-xp * xp < log_rel);
}

}  // namespace stirapsim
