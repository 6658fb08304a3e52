#pragma once

#include <string_view>

namespace imbalance {

/// Balancing regime of a settlement period. A long system (s >= 0) settles
/// at the marginal decremental price, a short system at the incremental one.
enum class Regime { mdp, mip };

constexpr Regime regime_of(double system_imbalance_mw) noexcept {
    return system_imbalance_mw >= 0.0 ? Regime::mdp : Regime::mip;
}

constexpr std::string_view to_string(Regime r) noexcept {
    return r == Regime::mdp ? "mdp" : "mip";
}

} // namespace imbalance
