#pragma once

// Harmonic decomposition, THD, RMS and power-factor measurements over
// integer-cycle waveform windows.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "upsim/errors.hpp"
#include "upsim/waveform.hpp"

namespace upsim {

/// Peak amplitude and phase (cosine reference) per harmonic order.
struct HarmonicSpectrum {
    double f0 = 0.0;
    std::map<int, double> magnitudes;
    std::map<int, double> phases;

    double magnitude(int order) const {
        auto it = magnitudes.find(order);
        return it == magnitudes.end() ? 0.0 : it->second;
    }
};

inline void require_integer_periods(const Waveform& w, double f0) {
    if (!(f0 > 0.0)) throw ArgumentError("fundamental frequency must be positive");
    const double periods = w.duration() * f0;
    if (periods < 1.0 - 1e-9 || std::abs(periods - std::round(periods)) > 1e-6 * std::max(1.0, periods))
        throw ArgumentError("waveform '" + w.name() + "' does not span an integer number of " + std::to_string(f0) +
                            " Hz periods (" + std::to_string(periods) + ")");
}

/// Fourier coefficients at f0, 2 f0, ..., max_order f0 with the rectangular
/// window `w`. Magnitude of order k is 2/N |sum x_i exp(-j 2 pi k f0 t_i)|.
inline HarmonicSpectrum harmonics(const Waveform& w, double f0, int max_order) {
    if (max_order < 1) throw ArgumentError("max_order must be at least 1");
    require_integer_periods(w, f0);
    const auto x = w.samples();
    const double n = static_cast<double>(x.size());
    HarmonicSpectrum spec;
    spec.f0 = f0;
    for (int k = 1; k <= max_order; ++k) {
        // Recurrence for exp(-j theta i); renormalised periodically.
        const double theta = 2.0 * std::numbers::pi * k * f0 * w.dt();
        const std::complex<double> rot = std::polar(1.0, -theta);
        std::complex<double> phasor{1.0, 0.0};
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t i = 0; i < x.size(); ++i) {
            acc += x[i] * phasor;
            phasor *= rot;
            if ((i & 1023) == 1023) phasor = std::polar(1.0, -theta * static_cast<double>(i + 1));
        }
        acc *= 2.0 / n;
        spec.magnitudes[k] = std::abs(acc);
        spec.phases[k] = std::arg(acc);
    }
    return spec;
}

/// 100 sqrt(sum_{k=2..max_order} H_k^2) / H_1.
inline double thd(const HarmonicSpectrum& spec, int max_order) {
    const double h1 = spec.magnitude(1);
    if (!(h1 > 0.0)) throw UndefinedQuantityError("THD undefined: zero fundamental");
    double sum = 0.0;
    for (const auto& [k, h] : spec.magnitudes)
        if (k >= 2 && k <= max_order) sum += h * h;
    return 100.0 * std::sqrt(sum) / h1;
}

inline double rms(const Waveform& w) {
    const auto x = w.samples();
    const double ss = std::transform_reduce(x.begin(), x.end(), 0.0, std::plus<>{}, [](double v) { return v * v; });
    return std::sqrt(ss / static_cast<double>(x.size()));
}

inline double mean(const Waveform& w) {
    const auto x = w.samples();
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

struct PowerMeasurement {
    double p_real;
    double s_apparent;
    double pf;
};

inline void require_aligned(const Waveform& v, const Waveform& i) {
    if (v.size() != i.size()) throw ArgumentError("voltage and current windows differ in length");
    if (std::abs(v.dt() - i.dt()) > 1e-9 * v.dt()) throw ArgumentError("voltage and current sample rates differ");
}

/// True power factor P / (V_rms I_rms). For undistorted sinusoids this is the
/// cosine of the phase angle between them.
inline PowerMeasurement power_factor(const Waveform& v, const Waveform& i) {
    require_aligned(v, i);
    const auto vs = v.samples();
    const auto is = i.samples();
    const double p = std::transform_reduce(vs.begin(), vs.end(), is.begin(), 0.0) / static_cast<double>(vs.size());
    const double s = rms(v) * rms(i);
    if (!(s > 0.0)) throw UndefinedQuantityError("power factor undefined: zero apparent power");
    return {p, s, p / s};
}

/// cos of the angle between the fundamental components of v and i.
inline double displacement_power_factor(const Waveform& v, const Waveform& i, double f0) {
    require_aligned(v, i);
    const auto hv = harmonics(v, f0, 1);
    const auto hi = harmonics(i, f0, 1);
    if (!(hv.magnitude(1) > 0.0 && hi.magnitude(1) > 0.0))
        throw UndefinedQuantityError("displacement power factor undefined: zero fundamental");
    return std::cos(hv.phases.at(1) - hi.phases.at(1));
}

struct PerformanceReport {
    double pf_sending = 0.0;
    double displacement_pf = 0.0;
    double thd_mains_i = 0.0;
    double thd_load_v = 0.0;
    double thd_load_i = 0.0;
    double p_real = 0.0;
    double s_apparent = 0.0;
};

struct AnalysisWindows {
    double mains_start = 0.0, mains_end = 0.0;
    double load_start = 0.0, load_end = 0.0;
};

struct Report {
    PerformanceReport performance;
    HarmonicSpectrum mains_i;
    HarmonicSpectrum load_v;
    HarmonicSpectrum load_i;
    AnalysisWindows windows;
    int max_order = 13;
};

namespace detail {

inline const Waveform& find_waveform(const std::vector<Waveform>& ws, const std::string& name) {
    for (const auto& w : ws)
        if (w.name() == name) return w;
    throw ArgumentError("required signal '" + name + "' is missing");
}

inline const Waveform* try_find_waveform(const std::vector<Waveform>& ws, const std::string& name) {
    for (const auto& w : ws)
        if (w.name() == name) return &w;
    return nullptr;
}

/// One past the last sample of the final run in which `flag` is high.
inline std::size_t end_of_last_high_run(const Waveform& flag) {
    const auto x = flag.samples();
    for (std::size_t i = x.size(); i > 0; --i)
        if (x[i - 1] > 0.5) return i;
    throw ArgumentError("signal '" + flag.name() + "' is never high");
}

}  // namespace detail

/// Builds the harmonic table and performance line from named waveforms.
///
/// The mains port (mains_v, mains_i) is analysed over the last `cycles`
/// fundamental periods in which the grid was available, when a
/// `grid_available` trace is supplied; otherwise over the trailing cycles.
/// The load port (load_v, load_i) always uses the trailing cycles.
inline Report build_report(const std::vector<Waveform>& waveforms, double f0, int max_order, int cycles = 5) {
    const Waveform& mains_v = detail::find_waveform(waveforms, "mains_v");
    const Waveform& mains_i = detail::find_waveform(waveforms, "mains_i");
    const Waveform& load_v = detail::find_waveform(waveforms, "load_v");
    const Waveform& load_i = detail::find_waveform(waveforms, "load_i");

    std::size_t mains_end = mains_v.size();
    if (const Waveform* avail = detail::try_find_waveform(waveforms, "grid_available"))
        mains_end = detail::end_of_last_high_run(*avail);
    const Waveform mv = window_ending_at(mains_v, mains_end, f0, cycles);
    const Waveform mi = window_ending_at(mains_i, mains_end, f0, cycles);
    const Waveform lv = steady_state_window(load_v, f0, cycles);
    const Waveform li = steady_state_window(load_i, f0, cycles);

    Report r;
    r.max_order = max_order;
    r.mains_i = harmonics(mi, f0, max_order);
    r.load_v = harmonics(lv, f0, max_order);
    r.load_i = harmonics(li, f0, max_order);
    const auto pw = power_factor(mv, mi);
    r.performance.p_real = pw.p_real;
    r.performance.s_apparent = pw.s_apparent;
    r.performance.pf_sending = pw.pf;
    r.performance.displacement_pf = displacement_power_factor(mv, mi, f0);
    r.performance.thd_mains_i = thd(r.mains_i, max_order);
    r.performance.thd_load_v = thd(r.load_v, max_order);
    r.performance.thd_load_i = thd(r.load_i, max_order);
    r.windows = {mv.t0(), mv.t0() + mv.duration(), lv.t0(), lv.t0() + lv.duration()};
    return r;
}

/// sqrt of the summed squares of the even orders up to max_order.
inline double even_residual(const HarmonicSpectrum& spec, int max_order) {
    double sum = 0.0;
    for (const auto& [k, h] : spec.magnitudes)
        if (k % 2 == 0 && k <= max_order) sum += h * h;
    return std::sqrt(sum);
}

/// Sum of cosines with the given peak magnitudes (order -> amplitude).
inline Waveform synthesize(std::string name, const std::map<int, double>& magnitudes, double f0, double dt,
                           int cycles, const std::map<int, double>& phases = {}) {
    const std::size_t n = samples_per_cycles(dt, f0, cycles);
    std::vector<double> x(n, 0.0);
    for (const auto& [k, h] : magnitudes) {
        const auto it = phases.find(k);
        const double phi = it == phases.end() ? 0.0 : it->second;
        const double w = 2.0 * std::numbers::pi * k * f0;
        for (std::size_t i = 0; i < n; ++i) x[i] += h * std::cos(w * static_cast<double>(i) * dt + phi);
    }
    return {std::move(name), dt, 0.0, std::move(x)};
}

}  // namespace upsim
