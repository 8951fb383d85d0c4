#include "stirapsim/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "stirapsim/units.hpp"

namespace stirapsim {

namespace {

ConditionReport make_report(std::string name, double lhs, double rhs, double threshold) {
    ConditionReport rep;
    rep.name = std::move(name);
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.threshold = threshold;
    rep.margin = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
    rep.pass = rep.margin >= threshold;
    return rep;
}

double delta_for_mode(const FeasibilityInput& in, std::size_t i) {
    if (in.delta_p.empty()) return 0.0;
    return in.delta_p[std::min(i, in.delta_p.size() - 1)];
}

}  // namespace

ConditionReport check_adiabatic(const FeasibilityInput& in) {
    double worst_lhs = 0.0, worst_rhs = 1.0,
           worst_margin = std::numeric_limits<double>::infinity();
    auto consider = [&](double lhs, double rhs) {
        const double margin = lhs / rhs;
        if (margin < worst_margin) {
            worst_margin = margin;
            worst_lhs = lhs;
            worst_rhs = rhs;
        }
    };
    for (std::size_t i = 0; i < in.eta0.size(); ++i)
        consider(std::abs(in.eta0[i]) * in.w_c / in.v,
                 std::sqrt(1.0 + delta_for_mode(in, i) * in.w_c / in.v));
    for (std::size_t i = 0; i < std::max<std::size_t>(1, in.delta_p.size()); ++i)
        consider(in.omega0 * in.w_p / in.v,
                 std::sqrt(1.0 + delta_for_mode(in, i) * in.w_p / in.v));
    return make_report("adiabatic_following", worst_lhs, worst_rhs, in.threshold);
}

double overlap_integral_closed_form(double eta0, double omega0, double w_c, double w_p, double d,
                                    double v) {
    const double wsq = w_c * w_c + w_p * w_p;
    return eta0 * omega0 * std::sqrt(std::numbers::pi) * (w_c * w_p / std::sqrt(wsq)) / v *
           std::exp(-d * d / wsq);
}

ConditionReport check_overlap(const FeasibilityInput& in) {
    double worst_lhs = 0.0, worst_rhs = 1.0,
           worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < in.eta0.size(); ++i) {
        const double lhs =
            overlap_integral_closed_form(std::abs(in.eta0[i]), in.omega0, in.w_c, in.w_p, in.d, in.v);
        const double ge = in.gamma_e.empty() ? 0.0
                                             : in.gamma_e[std::min(i, in.gamma_e.size() - 1)];
        const double dp = delta_for_mode(in, i);
        const double rhs = std::sqrt(ge * ge + dp * dp);
        const double margin = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
        if (margin < worst_margin) {
            worst_margin = margin;
            worst_lhs = lhs;
            worst_rhs = rhs;
        }
    }
    return make_report("pulse_overlap", worst_lhs, worst_rhs, in.threshold);
}

ConditionReport check_strong_coupling(const FeasibilityInput& in) {
    double lhs = std::numeric_limits<double>::infinity();
    for (double e : in.eta0) lhs = std::min(lhs, std::abs(e));
    const double rhs = in.gamma_f + 2.0 * in.kappa;
    return make_report("strong_coupling", lhs, rhs, in.threshold);
}

ConditionReport check_mode_spacing(const FeasibilityInput& in) {
    double rhs = in.gamma_f + 2.0 * in.kappa;
    for (double e : in.eta0) rhs = std::max(rhs, std::abs(e));
    return make_report("mode_spacing", std::abs(in.mode_spacing), rhs, in.threshold);
}

RepetitionRate repetition_rate(const FeasibilityInput& in) {
    RepetitionRate out;
    const double transit = (in.w_c + in.w_p) / in.v;
    const double ring_down = in.kappa > 0.0 ? 1.0 / (2.0 * in.kappa)
                                            : 0.0;  // instantly reset cavity
    out.interval_us = std::max(transit, ring_down);
    // Half of the dissociation events are idle, hence the extra factor 2.
    out.rate_khz = 1e3 / (2.0 * out.interval_us);
    return out;
}

RecoilRatio recoil_distinguishability(const FeasibilityInput& in, double d_x_um) {
    if (!(d_x_um > 0.0)) throw std::invalid_argument("dissociation-region size must be positive");
    if (in.omega_p.size() < 2)
        throw std::invalid_argument("recoil ratio needs two pump carrier frequencies");
    RecoilRatio out;
    const double dk = std::abs(in.omega_p[1] - in.omega_p[0]) / units::speed_of_light;  // rad/um
    if (dk == 0.0) {
        out.infinite = true;
        out.ratio = std::numeric_limits<double>::infinity();
        return out;
    }
    out.ratio = 1.0 / (d_x_um * dk);
    return out;
}

std::vector<ConditionReport> all_condition_reports(const FeasibilityInput& in) {
    std::vector<ConditionReport> reports{check_adiabatic(in), check_overlap(in),
                                         check_strong_coupling(in)};
    if (in.mode_spacing > 0.0) reports.push_back(check_mode_spacing(in));
    return reports;
}

}  // namespace stirapsim
