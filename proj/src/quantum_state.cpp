#include "stirapsim/quantum_state.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace stirapsim {

std::string to_string(Level lvl) {
    switch (lvl) {
        case Level::g1: return "g1";
        case Level::g2: return "g2";
        case Level::e1: return "e1";
        case Level::e2: return "e2";
        case Level::e: return "e";
        case Level::f: return "f";
        case Level::l: return "l";
        case Level::sink: return "sink";
    }
    return "?";
}

std::string to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::two_mode_single_node: return "two_mode_single_node";
        case Scheme::one_mode_single_node: return "one_mode_single_node";
        case Scheme::cascaded: return "cascaded";
    }
    return "?";
}

void validate_levels(const std::vector<FragmentLevel>& levels) {
    std::set<Level> seen;
    for (const auto& lvl : levels) {
        if (!seen.insert(lvl.label).second)
            throw std::invalid_argument("duplicate fragment level " + to_string(lvl.label));
        if (lvl.decay_rate < 0.0)
            throw std::invalid_argument("negative decay rate on level " + to_string(lvl.label));
        if ((lvl.decay_rate > 0.0) != lvl.decay_target.has_value())
            throw std::invalid_argument("decay target must be set iff decay_rate > 0 (level " +
                                        to_string(lvl.label) + ")");
    }
}

void validate_cavity(const std::vector<CavityMode>& modes) {
    if (modes.size() > 2) throw std::invalid_argument("a cavity supports at most two modes");
    for (const auto& m : modes)
        if (m.kappa < 0.0) throw std::invalid_argument("negative cavity decay rate");
    if (modes.size() == 2 && modes[0].frequency == modes[1].frequency &&
        modes[0].node == modes[1].node)
        throw std::invalid_argument("cavity mode frequencies must be distinct");
}

BasisState single_node_state(Level lvl, int photon_mode, int mode_count) {
    BasisState s;
    s.levels = {lvl, Level::g1};
    s.node_count = 1;
    s.mode_count = static_cast<std::uint8_t>(mode_count);
    if (photon_mode >= 0) s.photons[photon_mode] = 1;
    return s;
}

BasisState cascaded_state(Level sender, Level receiver, int photon_mode) {
    BasisState s;
    s.levels = {sender, receiver};
    s.node_count = 2;
    s.mode_count = 2;
    if (photon_mode >= 0) s.photons[photon_mode] = 1;
    return s;
}

namespace {

using Rule = std::function<std::optional<BasisState>(const BasisState&)>;

// Swap the fragment level on one node if it matches.
Rule level_swap(int node, Level from, Level to) {
    return [=](const BasisState& s) -> std::optional<BasisState> {
        if (s.levels[node] != from) return std::nullopt;
        BasisState out = s;
        out.levels[node] = to;
        return out;
    };
}

// Raman vertex: (lvl_with_photon, photon in mode) <-> (excited, photon removed).
Rule absorb_photon(int node, int mode, Level from, Level to) {
    return [=](const BasisState& s) -> std::optional<BasisState> {
        if (s.levels[node] != from || s.photons[mode] != 1) return std::nullopt;
        BasisState out = s;
        out.levels[node] = to;
        out.photons[mode] = 0;
        return out;
    };
}

Rule emit_photon(int node, int mode, Level from, Level to) {
    return [=](const BasisState& s) -> std::optional<BasisState> {
        if (s.levels[node] != from || s.total_photons() != 0) return std::nullopt;
        BasisState out = s;
        out.levels[node] = to;
        out.photons[mode] = 1;
        return out;
    };
}

Rule annihilate(int mode) {
    return [=](const BasisState& s) -> std::optional<BasisState> {
        if (s.photons[mode] != 1) return std::nullopt;
        BasisState out = s;
        out.photons[mode] = 0;
        return out;
    };
}

Rule move_photon(int from_mode, int to_mode) {
    return [=](const BasisState& s) -> std::optional<BasisState> {
        if (s.photons[from_mode] != 1 || s.photons[to_mode] != 0) return std::nullopt;
        BasisState out = s;
        out.photons[from_mode] = 0;
        out.photons[to_mode] = 1;
        return out;
    };
}

std::vector<Rule> scheme_rules(Scheme scheme) {
    std::vector<Rule> rules;
    switch (scheme) {
        case Scheme::two_mode_single_node:
            for (int i = 0; i < 2; ++i) {
                Level ei = i == 0 ? Level::e1 : Level::e2;
                Level gi = i == 0 ? Level::g1 : Level::g2;
                rules.push_back(level_swap(0, gi, ei));  // pump, both directions
                rules.push_back(level_swap(0, ei, gi));
                rules.push_back(absorb_photon(0, i, Level::f, ei));  // cavity
                rules.push_back(emit_photon(0, i, ei, Level::f));
                rules.push_back(level_swap(0, ei, Level::sink));  // gamma_e
                rules.push_back(annihilate(i));                   // kappa
            }
            rules.push_back(level_swap(0, Level::f, Level::l));  // gamma_f
            break;
        case Scheme::one_mode_single_node:
            rules.push_back(level_swap(0, Level::g2, Level::e));  // pump
            rules.push_back(level_swap(0, Level::e, Level::g2));
            rules.push_back(absorb_photon(0, 0, Level::g1, Level::e));  // cavity
            rules.push_back(emit_photon(0, 0, Level::e, Level::g1));
            rules.push_back(level_swap(0, Level::e, Level::sink));  // gamma_e
            rules.push_back(annihilate(0));                         // kappa
            break;
        case Scheme::cascaded:
            for (int n = 0; n < 2; ++n) {
                rules.push_back(level_swap(n, Level::g2, Level::e));
                rules.push_back(level_swap(n, Level::e, Level::g2));
                rules.push_back(absorb_photon(n, n, Level::g1, Level::e));
                rules.push_back(emit_photon(n, n, Level::e, Level::g1));
                rules.push_back(level_swap(n, Level::e, Level::sink));
                rules.push_back(annihilate(n));
            }
            rules.push_back(move_photon(0, 1));  // unidirectional link
            rules.push_back(move_photon(1, 0));  // adjoint side of the link term
            break;
    }
    return rules;
}

std::vector<BasisState> scheme_seeds(Scheme scheme) {
    switch (scheme) {
        case Scheme::two_mode_single_node:
            return {single_node_state(Level::g1, -1, 2), single_node_state(Level::g2, -1, 2)};
        case Scheme::one_mode_single_node:
            return {single_node_state(Level::g2, -1, 1), single_node_state(Level::g1, -1, 1)};
        case Scheme::cascaded:
            return {cascaded_state(Level::g2, Level::g1, -1),
                    cascaded_state(Level::g1, Level::g1, -1)};
    }
    return {};
}

int photon_rank(const BasisState& s) {
    if (s.photons[0]) return 1;
    if (s.photons[1]) return 2;
    return 0;
}

std::uint64_t sort_key(const BasisState& s) {
    return (static_cast<std::uint64_t>(s.levels[0]) << 16) |
           (static_cast<std::uint64_t>(s.levels[1]) << 8) |
           static_cast<std::uint64_t>(photon_rank(s));
}

}  // namespace

StateSpace StateSpace::build(Scheme scheme, int node_count) {
    const int expected_nodes = scheme == Scheme::cascaded ? 2 : 1;
    if (node_count != expected_nodes)
        throw std::invalid_argument("unsupported scheme/node_count combination: " +
                                    to_string(scheme) + " with node_count=" +
                                    std::to_string(node_count));

    const auto rules = scheme_rules(scheme);
    std::vector<BasisState> frontier = scheme_seeds(scheme);
    std::vector<BasisState> found = frontier;
    while (!frontier.empty()) {
        std::vector<BasisState> next;
        for (const auto& s : frontier) {
            for (const auto& rule : rules) {
                if (auto img = rule(s)) {
                    if (img->total_photons() > 1) continue;  // outside the manifold
                    if (std::find(found.begin(), found.end(), *img) == found.end()) {
                        found.push_back(*img);
                        next.push_back(*img);
                    }
                }
            }
        }
        frontier = std::move(next);
    }

    std::sort(found.begin(), found.end(),
              [](const BasisState& a, const BasisState& b) { return sort_key(a) < sort_key(b); });

    StateSpace space;
    space.scheme_ = scheme;
    space.node_count_ = expected_nodes;
    space.mode_count_ = scheme == Scheme::one_mode_single_node ? 1 : 2;
    space.states_ = std::move(found);
    return space;
}

const BasisState& StateSpace::state_at(int index) const {
    if (index < 0 || index >= dimension())
        throw std::out_of_range("basis index " + std::to_string(index) + " out of range");
    return states_[index];
}

int StateSpace::index_of(const BasisState& state) const {
    auto it = std::find(states_.begin(), states_.end(), state);
    if (it == states_.end()) throw std::out_of_range("state not in space");
    return static_cast<int>(it - states_.begin());
}

bool StateSpace::contains(const BasisState& state) const {
    return std::find(states_.begin(), states_.end(), state) != states_.end();
}

int StateSpace::index(Level lvl, int photon_mode) const {
    return index_of(single_node_state(lvl, photon_mode, mode_count_));
}

int StateSpace::index_joint(Level sender, Level receiver, int photon_mode) const {
    return index_of(cascaded_state(sender, receiver, photon_mode));
}

std::string StateSpace::label(int index) const {
    const BasisState& s = state_at(index);
    std::string photon = "vac";
    if (scheme_ == Scheme::cascaded) {
        if (s.photons[0]) photon = "ws";
        if (s.photons[1]) photon = "wr";
        return to_string(s.levels[0]) + "." + to_string(s.levels[1]) + "_" + photon;
    }
    if (scheme_ == Scheme::one_mode_single_node) {
        if (s.photons[0]) photon = "w2";  // the single mode sits at the omega_2 frequency
    } else {
        if (s.photons[0]) photon = "w1";
        if (s.photons[1]) photon = "w2";
    }
    return to_string(s.levels[0]) + "_" + photon;
}

std::vector<std::pair<BasisState, BasisState>> StateSpace::structural_images() const {
    std::vector<std::pair<BasisState, BasisState>> images;
    const auto rules = scheme_rules(scheme_);
    for (const auto& s : states_)
        for (const auto& rule : rules)
            if (auto img = rule(s))
                if (img->total_photons() <= 1) images.emplace_back(s, *img);
    return images;
}

}  // namespace stirapsim
