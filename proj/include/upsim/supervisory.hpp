#pragma once

// Supervisory relays: the changeover (transfer) switch routing the load
// between grid and inverter, and the comparator-driven charger relay.

#include <optional>
#include <string>

#include "upsim/errors.hpp"

namespace upsim {

enum class Source { grid, inverter };

/// Moving-pole position. `open` while the contact travels between throws.
enum class Pole { grid, inverter, open };

inline const char* to_string(Source s) { return s == Source::grid ? "grid" : "inverter"; }

inline const char* to_string(Pole p) {
    switch (p) {
        case Pole::grid: return "grid";
        case Pole::inverter: return "inverter";
        case Pole::open: return "open";
    }
    return "?";
}

struct PendingTransfer {
    Source target;
    double t_complete;
};

/// Changeover relay. The coil is energised while mains power is available,
/// which pulls the pole onto the normally-open (grid) contact; de-energised,
/// the pole falls back to the normally-closed (inverter) contact.
struct TransferSwitchState {
    bool energized = true;
    Pole pole = Pole::grid;
    std::optional<PendingTransfer> pending;
    double last_t = 0.0;
    /// Set when a transition was requested with a travel time outside 3-5 ms.
    bool travel_time_warning = false;

    static TransferSwitchState initial(bool grid_available, double t0 = 0.0) {
        return {grid_available, grid_available ? Pole::grid : Pole::inverter, std::nullopt, t0, false};
    }

    /// Source currently bridged to the load, if any.
    std::optional<Source> bridged() const {
        switch (pole) {
            case Pole::grid: return Source::grid;
            case Pole::inverter: return Source::inverter;
            case Pole::open: return std::nullopt;
        }
        return std::nullopt;
    }
};

inline constexpr double kMinTransferTime = 3e-3;
inline constexpr double kMaxTransferTime = 5e-3;

/// Advances the changeover relay to time t.
///
/// A pending travel completes once t reaches its completion time. A change of
/// grid availability opens the pole immediately (break before make) and
/// schedules arrival at the new throw after `transfer_time`; a reversal while
/// in flight re-targets the travel from the current time.
inline TransferSwitchState transfer_switch_step(TransferSwitchState state, bool grid_available, double t,
                                                double transfer_time) {
    if (t < state.last_t) throw ArgumentError("transfer switch time ran backwards");
    if (!(transfer_time > 0.0)) throw ArgumentError("transfer time must be positive");
    state.last_t = t;

    constexpr double eps = 1e-12;
    if (state.pending && t + eps >= state.pending->t_complete) {
        state.pole = state.pending->target == Source::grid ? Pole::grid : Pole::inverter;
        state.pending.reset();
    }
    if (grid_available != state.energized) {
        state.energized = grid_available;
        const Source target = grid_available ? Source::grid : Source::inverter;
        if (transfer_time < kMinTransferTime - eps || transfer_time > kMaxTransferTime + eps)
            state.travel_time_warning = true;
        state.pole = Pole::open;
        state.pending = PendingTransfer{target, t + transfer_time};
    }
    return state;
}

/// Ideal comparator: V- rail when v_bat >= v_ref, V+ rail otherwise.
inline double comparator_output(double v_bat, double v_ref, double v_sat) {
    if (!(v_sat > 0.0)) throw ArgumentError("comparator saturation voltage must be positive");
    return v_bat >= v_ref ? -v_sat : v_sat;
}

struct ChargeControllerState {
    double v_ref = 12.0;
    double v_sat = 12.0;
    bool connected = false;
    /// Half-width of the switching band around v_ref; 0 gives the bare comparator.
    double hysteresis = 0.0;

    void validate() const {
        if (!(v_ref > 0.0)) throw ArgumentError("charge controller v_ref must be positive");
        if (!(v_sat > 0.0)) throw ArgumentError("charge controller v_sat must be positive");
        if (!(hysteresis >= 0.0)) throw ArgumentError("charge controller hysteresis must be non-negative");
    }
};

/// The relay closes (battery on charger) while the comparator sits at V+.
/// With hysteresis h the closing threshold is v_ref - h and the opening
/// threshold v_ref + h.
inline ChargeControllerState charge_controller_step(ChargeControllerState state, double v_bat) {
    state.validate();
    if (state.hysteresis == 0.0) {
        state.connected = comparator_output(v_bat, state.v_ref, state.v_sat) > 0.0;
    } else if (state.connected) {
        state.connected = comparator_output(v_bat, state.v_ref + state.hysteresis, state.v_sat) > 0.0;
    } else {
        state.connected = comparator_output(v_bat, state.v_ref - state.hysteresis, state.v_sat) > 0.0;
    }
    return state;
}

}  // namespace upsim
