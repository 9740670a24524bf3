#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "upsim/errors.hpp"

namespace upsim {

/// Uniformly sampled time series; sample i sits at t0 + i * dt.
class Waveform {
public:
    Waveform(std::string name, double dt, double t0, std::vector<double> samples)
        : name_(std::move(name)), dt_(dt), t0_(t0), samples_(std::move(samples)) {
        if (!(dt_ > 0.0)) throw ArgumentError("waveform '" + name_ + "': dt must be positive");
        if (samples_.empty()) throw ArgumentError("waveform '" + name_ + "': no samples");
    }

    const std::string& name() const noexcept { return name_; }
    double dt() const noexcept { return dt_; }
    double t0() const noexcept { return t0_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double time(std::size_t i) const noexcept { return t0_ + static_cast<double>(i) * dt_; }
    double duration() const noexcept { return static_cast<double>(samples_.size()) * dt_; }
    std::span<const double> samples() const noexcept { return samples_; }
    double operator[](std::size_t i) const noexcept { return samples_[i]; }

    /// Samples [first, first + count) as a new waveform with shifted t0.
    Waveform slice(std::size_t first, std::size_t count) const {
        if (first + count > samples_.size() || count == 0)
            throw ArgumentError("waveform '" + name_ + "': slice out of range");
        return {name_, dt_, time(first),
                std::vector<double>(samples_.begin() + static_cast<std::ptrdiff_t>(first),
                                    samples_.begin() + static_cast<std::ptrdiff_t>(first + count))};
    }

    Waveform renamed(std::string name) const { return {std::move(name), dt_, t0_, samples_}; }

private:
    std::string name_;
    double dt_;
    double t0_;
    std::vector<double> samples_;
};

/// Number of samples spanning `cycles` periods of f0.
inline std::size_t samples_per_cycles(double dt, double f0, int cycles) {
    return static_cast<std::size_t>(std::llround(cycles / (f0 * dt)));
}

/// Integer-cycle slice of `w` that ends just before sample `end`.
inline Waveform window_ending_at(const Waveform& w, std::size_t end, double f0, int cycles) {
    if (cycles < 1) throw ArgumentError("window needs at least one cycle");
    if (!(f0 > 0.0)) throw ArgumentError("fundamental frequency must be positive");
    const std::size_t n = samples_per_cycles(w.dt(), f0, cycles);
    if (n == 0 || n > end || end > w.size())
        throw ArgumentError("waveform '" + w.name() + "' is shorter than " + std::to_string(cycles) +
                            " cycles of " + std::to_string(f0) + " Hz");
    return w.slice(end - n, n);
}

/// Trailing integer-cycle slice, round(cycles / (f0 dt)) samples long.
inline Waveform steady_state_window(const Waveform& w, double f0, int cycles) {
    return window_ending_at(w, w.size(), f0, cycles);
}

}  // namespace upsim
