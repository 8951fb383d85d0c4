#include "stirapsim/model_builder.hpp"

#include <cmath>

namespace stirapsim {

namespace {

constexpr double kTwoPhotonTol = 1e-6;  // rad/us

// |to><from| + |from><to| over the space, unit amplitude.
Eigen::MatrixXd symmetric_coupling(const StateSpace& space, int from, int to) {
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(space.dimension(), space.dimension());
    op(to, from) = 1.0;
    op(from, to) = 1.0;
    return op;
}

Eigen::MatrixXcd level_projector_map(const StateSpace& space, int node, Level from, Level to) {
    const int dim = space.dimension();
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        BasisState s = space.state_at(i);
        if (s.levels[node] != from) continue;
        s.levels[node] = to;
        op(space.index_of(s), i) = 1.0;
    }
    return op;
}

void check_two_photon_resonance(double detuning, const char* which) {
    if (std::abs(detuning) > kTwoPhotonTol)
        throw std::invalid_argument(std::string("inconsistent config: two-photon detuning on ") +
                                    which + " exceeds tolerance");
}

}  // namespace

Eigen::MatrixXcd mode_annihilator(const StateSpace& space, int mode) {
    const int dim = space.dimension();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        BasisState s = space.state_at(i);
        if (s.photons[mode] != 1) continue;
        s.photons[mode] = 0;
        a(space.index_of(s), i) = 1.0;
    }
    return a;
}

Eigen::MatrixXcd OpenSystemModel::hamiltonian(double t) const {
    Eigen::MatrixXcd h = static_diag_.cast<std::complex<double>>().asDiagonal();
    for (const auto& c : couplings_) h += c.shape(t) * c.op_sym;
    return h;
}

double OpenSystemModel::hermiticity_residual(int samples) const {
    const auto [t0, t1] = window_;
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double t = t0 + (t1 - t0) * k / std::max(1, samples - 1);
        const Eigen::MatrixXcd h = hamiltonian(t);
        worst = std::max(worst, (h - h.adjoint()).cwiseAbs().maxCoeff());
    }
    return worst;
}

OpenSystemModel OpenSystemModel::assemble(StateSpace space, Eigen::VectorXd static_diag,
                                          std::vector<TimedCoupling> couplings,
                                          std::vector<CollapseChannel> channels,
                                          std::optional<CascadeLink> cascade,
                                          std::pair<double, double> window) {
    OpenSystemModel m;
    m.space_ = std::move(space);
    m.static_diag_ = std::move(static_diag);
    m.couplings_ = std::move(couplings);
    m.channels_ = std::move(channels);
    m.cascade_ = std::move(cascade);
    m.window_ = window;
    return m;
}

OpenSystemModel build_two_mode_model(const TwoModeParams& p) {
    p.pulses.validate();
    if (p.pulses.n_modes != 2)
        throw std::invalid_argument("two-mode scheme requires two cavity couplings");
    for (double rate : {p.gamma_e[0], p.gamma_e[1], p.gamma_f, p.kappa})
        if (rate < 0.0) throw std::invalid_argument("negative relaxation rate");

    StateSpace space = StateSpace::build(Scheme::two_mode_single_node);
    const int dim = space.dimension();

    Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim);
    const double sgn = doppler_sign(p.fragment);
    for (int i = 0; i < 2; ++i) {
        check_two_photon_resonance(p.two_photon_detuning[i], i == 0 ? "|f,w1>" : "|f,w2>");
        const Level ei = i == 0 ? Level::e1 : Level::e2;
        diag(space.index(ei)) = sgn * p.delta_p[i] + p.one_photon_detuning[i];
        diag(space.index(Level::f, i)) = p.two_photon_detuning[i];
    }

    std::vector<OpenSystemModel::TimedCoupling> couplings;
    for (int i = 0; i < 2; ++i) {
        const Level ei = i == 0 ? Level::e1 : Level::e2;
        const Level gi = i == 0 ? Level::g1 : Level::g2;
        // eta_i(t) |e_i><f| a_i + h.c.
        couplings.push_back({symmetric_coupling(space, space.index(Level::f, i), space.index(ei)),
                             eta_shape(p.pulses, i)});
        // -Omega_p(t) |e_i><g_i| + h.c.
        GaussianShape pump = pump_shape(p.pulses);
        pump.amp = -pump.amp;
        couplings.push_back({symmetric_coupling(space, space.index(gi), space.index(ei)), pump});
    }

    std::vector<CollapseChannel> channels;
    channels.push_back({"gamma_e1", std::sqrt(p.gamma_e[0]) *
                                        level_projector_map(space, 0, Level::e1, Level::sink)});
    channels.push_back({"gamma_e2", std::sqrt(p.gamma_e[1]) *
                                        level_projector_map(space, 0, Level::e2, Level::sink)});
    channels.push_back(
        {"gamma_f", std::sqrt(p.gamma_f) * level_projector_map(space, 0, Level::f, Level::l)});
    channels.push_back({"kappa_1", std::sqrt(2.0 * p.kappa) * mode_annihilator(space, 0)});
    channels.push_back({"kappa_2", std::sqrt(2.0 * p.kappa) * mode_annihilator(space, 1)});

    const auto window = integration_window(p.pulses);
    return OpenSystemModel::assemble(std::move(space), std::move(diag), std::move(couplings),
                                     std::move(channels), std::nullopt, window);
}

namespace {

// Shared between the single-node one-mode model and each cascaded node.
void append_one_mode_node(const StateSpace& space, int node, int mode, const OneModeParams& p,
                          Eigen::VectorXd& diag,
                          std::vector<OpenSystemModel::TimedCoupling>& couplings,
                          std::vector<CollapseChannel>& channels, const std::string& suffix) {
    p.pulses.validate();
    if (p.pulses.n_modes != 1)
        throw std::invalid_argument("one-mode scheme takes a single cavity coupling");
    if (p.gamma_e < 0.0 || p.kappa < 0.0)
        throw std::invalid_argument("negative relaxation rate");
    check_two_photon_resonance(p.two_photon_detuning, "|g1,w2>");

    const int dim = space.dimension();
    for (int i = 0; i < dim; ++i) {
        const BasisState& s = space.state_at(i);
        if (s.levels[node] == Level::e && s.total_photons() == 0)
            diag(i) += doppler_sign(p.fragment) * p.delta_p + p.one_photon_detuning;
        if (s.levels[node] == Level::g1 && s.photons[mode] == 1)
            diag(i) += p.two_photon_detuning;
    }

    // eta(t) |e><g1| a + h.c.
    Eigen::MatrixXd cavity = Eigen::MatrixXd::Zero(dim, dim);
    // -Omega_p(t) |e><g2| + h.c.
    Eigen::MatrixXd pump = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        BasisState s = space.state_at(i);
        if (s.levels[node] == Level::g1 && s.photons[mode] == 1) {
            s.levels[node] = Level::e;
            s.photons[mode] = 0;
            const int j = space.index_of(s);
            cavity(j, i) = 1.0;
            cavity(i, j) = 1.0;
        } else if (s.levels[node] == Level::g2) {
            s.levels[node] = Level::e;
            const int j = space.index_of(s);
            pump(j, i) = 1.0;
            pump(i, j) = 1.0;
        }
    }
    couplings.push_back({std::move(cavity), eta_shape(p.pulses, 0)});
    GaussianShape pshape = pump_shape(p.pulses);
    pshape.amp = -pshape.amp;
    couplings.push_back({std::move(pump), pshape});

    channels.push_back({"gamma_e" + suffix, std::sqrt(p.gamma_e) * level_projector_map(
                                                space, node, Level::e, Level::sink)});
    channels.push_back(
        {"kappa" + suffix, std::sqrt(2.0 * p.kappa) * mode_annihilator(space, mode)});
}

}  // namespace

OpenSystemModel build_one_mode_model(const OneModeParams& p) {
    StateSpace space = StateSpace::build(Scheme::one_mode_single_node);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(space.dimension());
    std::vector<OpenSystemModel::TimedCoupling> couplings;
    std::vector<CollapseChannel> channels;
    append_one_mode_node(space, 0, 0, p, diag, couplings, channels, "");
    const auto window = integration_window(p.pulses);
    return OpenSystemModel::assemble(std::move(space), std::move(diag), std::move(couplings),
                                     std::move(channels), std::nullopt, window);
}

OpenSystemModel build_cascaded_model(const CascadeParams& p) {
    if (p.receiver.pulses.order != PulseOrder::pump_first)
        throw std::invalid_argument("receiver pulses must run pump_first (time-reversed order)");
    if (p.sender.pulses.n_modes != 1 || p.receiver.pulses.n_modes != 1)
        throw std::invalid_argument("mismatched mode bookkeeping: cascaded nodes are one-mode");
    if (p.kappa_prime < 0.0) throw std::invalid_argument("negative link loss rate");

    StateSpace space = StateSpace::build(Scheme::cascaded, 2);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(space.dimension());
    std::vector<OpenSystemModel::TimedCoupling> couplings;
    std::vector<CollapseChannel> channels;
    append_one_mode_node(space, 0, 0, p.sender, diag, couplings, channels, "_s");
    append_one_mode_node(space, 1, 1, p.receiver, diag, couplings, channels, "_r");

    CascadeLink link;
    link.a_sender = mode_annihilator(space, 0);
    link.a_receiver = mode_annihilator(space, 1);
    // Equal-kappa nodes reduce to 2*kappa; the geometric mean covers the
    // asymmetric generalization.  Propagation loss attenuates the field
    // between the nodes: amplitude transmission sqrt(kappa/(kappa+kappa')),
    // while each node keeps its full local decay.  The untransmitted flux
    // is the loss channel on the propagating field.
    const double transmission =
        p.sender.kappa > 0.0 ? p.sender.kappa / (p.sender.kappa + p.kappa_prime) : 0.0;
    link.strength = std::sqrt(2.0 * p.sender.kappa) * std::sqrt(2.0 * p.receiver.kappa) *
                    std::sqrt(transmission);

    const auto ws = integration_window(p.sender.pulses);
    const auto wr = integration_window(p.receiver.pulses);
    const std::pair<double, double> window{std::min(ws.first, wr.first),
                                           std::max(ws.second, wr.second)};
    return OpenSystemModel::assemble(std::move(space), std::move(diag), std::move(couplings),
                                     std::move(channels), link, window);
}

}  // namespace stirapsim
