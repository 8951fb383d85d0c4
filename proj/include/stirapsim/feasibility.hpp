#pragma once

// Closed-form validity conditions and rate estimates: adiabatic
// following, pulse overlap, strong coupling, mode spacing, repetition
// rate, and the recoil-distinguishability ratio.  Every check reports the
// raw margin ratio alongside the pass flag; the ">>" threshold is a
// convention (default 10) and never hides the numbers.

#include <string>
#include <vector>

namespace stirapsim {

struct ConditionReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // lhs / rhs
    double threshold = 10.0;
    bool pass = false;
};

struct FeasibilityInput {
    std::vector<double> eta0;     // rad/us, one per mode
    double omega0 = 0.0;          // rad/us
    double w_c = 10.0;            // um
    double w_p = 10.0;            // um
    double d = 10.0;              // um
    double v = 1.0;               // um/us
    std::vector<double> delta_p;  // |k_p v_x| per pump component, rad/us
    std::vector<double> gamma_e;  // rad/us, one per excited level
    double gamma_f = 0.0;         // rad/us
    double kappa = 0.0;           // rad/us
    double mode_spacing = 0.0;    // |w2 - w1|, rad/us
    std::vector<double> omega_p;  // pump carrier frequencies, rad/us
    double threshold = 10.0;
};

/// eta0 w_c / v and Omega0 w_p / v against sqrt(1 + |Delta_p| w / v).
ConditionReport check_adiabatic(const FeasibilityInput& in);

/// Analytic Gaussian-product pulse-overlap integral against
/// sqrt(gamma_e^2 + Delta_p^2).
ConditionReport check_overlap(const FeasibilityInput& in);

/// |eta0| against gamma_f + 2*kappa.
ConditionReport check_strong_coupling(const FeasibilityInput& in);

/// |w2 - w1| against both |eta0| and gamma_f + 2*kappa.
ConditionReport check_mode_spacing(const FeasibilityInput& in);

/// Closed form of the overlap integral (also used by the quadrature
/// cross-check test): eta0*Omega0*sqrt(pi) * w_c w_p / (v sqrt(w_c^2+w_p^2))
/// * exp(-d^2/(w_c^2+w_p^2)).
double overlap_integral_closed_form(double eta0, double omega0, double w_c, double w_p, double d,
                                    double v);

struct RepetitionRate {
    double interval_us = 0.0;  // T = max[(w_c+w_p)/v, 1/(2 kappa)]
    double rate_khz = 0.0;     // W = 1/(2T)
};

RepetitionRate repetition_rate(const FeasibilityInput& in);

struct RecoilRatio {
    double ratio = 0.0;  // (hbar/D_x) / (hbar |k_p2 - k_p1|)
    bool infinite = false;  // equal pump wavenumbers
};

/// D_x in micrometers.
RecoilRatio recoil_distinguishability(const FeasibilityInput& in, double d_x_um);

std::vector<ConditionReport> all_condition_reports(const FeasibilityInput& in);

}  // namespace stirapsim
