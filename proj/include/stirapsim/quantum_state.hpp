#pragma once

// Truncated Hilbert spaces for the three interface scenarios.  Basis
// states pair a fragment level per node with a photon occupation per
// cavity mode, restricted to the single-excitation manifold.  The state
// set is the reachability closure of the scheme's Hamiltonian couplings
// and collapse channels, so no generator term ever maps out of it.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stirapsim {

enum class Scheme { two_mode_single_node, one_mode_single_node, cascaded };

enum class Level : std::uint8_t { g1, g2, e1, e2, e, f, l, sink };

std::string to_string(Level lvl);
std::string to_string(Scheme scheme);

/// Fragment level bookkeeping: energy relative to a declared zero plus
/// the decay channel it sources, if any.
struct FragmentLevel {
    Level label = Level::g1;
    double energy = 0.0;      // rad/us relative to the scheme's zero
    double decay_rate = 0.0;  // rad/us
    std::optional<Level> decay_target;
};

/// Validates rate/target pairing and label uniqueness.
void validate_levels(const std::vector<FragmentLevel>& levels);

enum class CavityNode { sender, receiver };

struct CavityMode {
    double frequency = 0.0;  // rad/us
    double kappa = 0.0;      // field decay rate, rad/us
    CavityNode node = CavityNode::sender;
};

/// At most two modes per cavity, distinct frequencies, kappa >= 0.
void validate_cavity(const std::vector<CavityMode>& modes);

/// One basis vector: fragment level per node, photon occupation per mode.
/// Total photon number never exceeds one.
struct BasisState {
    std::array<Level, 2> levels{Level::g1, Level::g1};
    std::array<std::uint8_t, 2> photons{0, 0};
    std::uint8_t node_count = 1;
    std::uint8_t mode_count = 1;

    int total_photons() const { return photons[0] + photons[1]; }
    bool operator==(const BasisState&) const = default;
};

BasisState single_node_state(Level lvl, int photon_mode /* -1 for vacuum */,
                             int mode_count);
BasisState cascaded_state(Level sender, Level receiver, int photon_mode);

/// Immutable, densely indexed basis enumeration for one scheme.
///
/// Ordering is fragment-major (level enum order, sender level outermost
/// for the cascaded scheme) and photon-minor with the vacuum first, so
/// CSV columns are stable across runs.
class StateSpace {
  public:
    StateSpace() = default;  // empty space; populate via build()
    static StateSpace build(Scheme scheme, int node_count = 1);

    Scheme scheme() const { return scheme_; }
    int dimension() const { return static_cast<int>(states_.size()); }
    int node_count() const { return node_count_; }
    int mode_count() const { return mode_count_; }

    const BasisState& state_at(int index) const;
    /// Dense index of a state; throws std::out_of_range for unknown states.
    int index_of(const BasisState& state) const;
    bool contains(const BasisState& state) const;

    /// Index of the single-node state (level, photon_mode) or the joint
    /// cascaded state; convenience over index_of.
    int index(Level lvl, int photon_mode = -1) const;
    int index_joint(Level sender, Level receiver, int photon_mode = -1) const;

    /// Stable column label, e.g. "g1_vac", "f_w1", "g1.g2_vac".
    std::string label(int index) const;

    const std::vector<BasisState>& states() const { return states_; }

    /// All structural transitions of the scheme (coupling directions and
    /// collapse maps).  Exposed so closure can be verified externally.
    std::vector<std::pair<BasisState, BasisState>> structural_images() const;

  private:
    Scheme scheme_ = Scheme::two_mode_single_node;
    int node_count_ = 1;
    int mode_count_ = 1;
    std::vector<BasisState> states_;
};

}  // namespace stirapsim
