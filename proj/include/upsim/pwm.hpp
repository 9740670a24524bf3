#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "upsim/errors.hpp"

namespace upsim {

/// Complementary gate pair of a fixed-frequency carrier.
///
/// Within each period T starting at kT the high gate conducts on
/// [kT, kT + duty T - dead_time) and the low gate on
/// [kT + duty T, kT + T - dead_time). Intervals are half-open; sample
/// instants within a millionth of a step of an edge count as on the edge.
class PwmPair {
public:
    PwmPair(double freq, double duty, double dead_time) : freq_(freq), duty_(duty), dead_time_(dead_time) {
        if (!(freq > 0.0)) throw ArgumentError("pwm frequency must be positive");
        if (!(duty >= 0.0 && duty <= 1.0)) throw ArgumentError("pwm duty must lie in [0, 1]");
        if (!(dead_time >= 0.0)) throw ArgumentError("pwm dead time must be non-negative");
    }

    struct State {
        bool high;
        bool low;
    };

    /// Gate states at time t; `tol` is the edge snapping tolerance in seconds.
    State at(double t, double tol) const {
        const double period = 1.0 / freq_;
        const double cycles = t * freq_;
        double k = std::floor(cycles + tol * freq_);
        double phase = t - k * period;
        if (phase < 0.0) phase = 0.0;
        const double high_end = duty_ * period - dead_time_;
        const double low_start = duty_ * period;
        const double low_end = period - dead_time_;
        auto before = [tol](double a, double b) { return a < b - tol; };
        const bool high = before(phase, high_end);
        const bool low = !before(phase, low_start) && before(phase, low_end);
        return {high, low};
    }

    double frequency() const noexcept { return freq_; }
    double duty() const noexcept { return duty_; }
    double dead_time() const noexcept { return dead_time_; }

private:
    double freq_;
    double duty_;
    double dead_time_;
};

struct GateSignals {
    std::vector<std::uint8_t> q_high;
    std::vector<std::uint8_t> q_low;
    double dt;
};

/// Samples a complementary PWM pair at t = i dt for t in [0, t_end).
inline GateSignals pwm_generate(double freq, double duty, double dead_time, double t_end, double dt) {
    if (!(duty >= 0.0 && duty <= 1.0)) throw ArgumentError("pwm duty must lie in [0, 1]");
    if (!(dt > 0.0) || !(dt < 1.0 / freq)) throw ArgumentError("pwm dt must be positive and below one period");
    const PwmPair pwm(freq, duty, dead_time);
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
    GateSignals g{std::vector<std::uint8_t>(n), std::vector<std::uint8_t>(n), dt};
    const double tol = 1e-6 * dt;
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = pwm.at(static_cast<double>(i) * dt, tol);
        g.q_high[i] = s.high;
        g.q_low[i] = s.low;
    }
    return g;
}

}  // namespace upsim
