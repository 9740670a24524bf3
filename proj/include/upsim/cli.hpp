#pragma once

// Command implementations behind the upsim executable. Each returns a
// process exit status and writes human-readable output to `out` and
// diagnostics to `err`.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "upsim/analysis.hpp"
#include "upsim/config.hpp"
#include "upsim/csv.hpp"
#include "upsim/errors.hpp"
#include "upsim/models.hpp"
#include "upsim/sstf.hpp"
#include "upsim/switchsim.hpp"

namespace upsim::cli {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_simulation = 2, exit_analysis = 3 };

inline constexpr const char* kOutDirEnv = "UPSIM_OUT_DIR";

/// Explicit flag first, then $UPSIM_OUT_DIR, then ./upsim_out.
inline std::string resolve_out_dir(const std::optional<std::string>& flag) {
    if (flag && !flag->empty()) return *flag;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return "upsim_out";
}

/// Files staged under temporary names and renamed into place together, so a
/// failed command leaves no partial output behind.
class StagedOutput {
public:
    explicit StagedOutput(std::filesystem::path dir) : dir_(std::move(dir)) {}
    StagedOutput(const StagedOutput&) = delete;
    StagedOutput& operator=(const StagedOutput&) = delete;

    ~StagedOutput() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& [tmp, final_path] : files_) std::filesystem::remove(tmp, ec);
        if (created_dir_) std::filesystem::remove(dir_, ec);  // only succeeds while empty
    }

    template <class Writer>
    void add(const std::string& filename, Writer&& write) {
        ensure_dir();
        const auto final_path = dir_ / filename;
        auto tmp = final_path;
        tmp += ".partial";
        files_.emplace_back(tmp, final_path);
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        write(out);
        if (!out.flush()) throw Error("failed writing '" + tmp.string() + "'");
    }

    void commit() {
        for (const auto& [tmp, final_path] : files_) std::filesystem::rename(tmp, final_path);
        committed_ = true;
    }

    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    void ensure_dir() {
        if (std::filesystem::exists(dir_)) {
            if (!std::filesystem::is_directory(dir_)) throw Error("'" + dir_.string() + "' is not a directory");
            return;
        }
        std::filesystem::create_directories(dir_);
        created_dir_ = true;
    }

    std::filesystem::path dir_;
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> files_;
    bool committed_ = false;
    bool created_dir_ = false;
};

inline Config load_config_with_overrides(const std::optional<std::string>& path,
                                         const std::vector<std::string>& overrides) {
    Config cfg = path ? load_config(*path) : Config{};
    for (const auto& o : overrides) apply_override(cfg, o);
    return cfg;
}

inline std::string fmt(double v, int precision = 6) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

// ---------------------------------------------------------------------------
// tf

struct TfOptions {
    std::string stage = "all";
    std::optional<std::string> config_path;
    std::vector<std::string> overrides;
    std::optional<double> duty;
    std::vector<double> freqs;
};

inline void print_polynomial(std::ostream& out, const char* label, const Polynomial& p) {
    out << "  " << label << ":";
    for (double c : p) out << ' ' << fmt(c, 10);
    out << '\n';
}

inline void print_tf(std::ostream& out, const std::string& title, const RationalTransferFunction& tf,
                     const std::vector<double>& freqs) {
    out << title << '\n';
    out << "  coefficients in ascending powers of s\n";
    print_polynomial(out, "numerator  ", tf.num());
    print_polynomial(out, "denominator", tf.den());
    out << "  order: " << poly::degree(tf.den()) << '\n';
    out << "  dc gain: " << fmt(dc_gain(tf), 10) << '\n';
    if (freqs.empty()) return;
    const auto resp = frequency_response(tf, freqs);
    out << "  " << std::left << std::setw(14) << "f [Hz]" << std::setw(16) << "|G|" << std::setw(14) << "|G| [dB]"
        << "phase [deg]\n";
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        out << "  " << std::setw(14) << fmt(freqs[k]) << std::setw(16) << fmt(resp[k].magnitude, 8) << std::setw(14)
            << fmt(20.0 * std::log10(resp[k].magnitude)) << fmt(resp[k].phase_rad * 180.0 / std::numbers::pi)
            << '\n';
    }
    out << std::right;
}

inline int cmd_tf(const TfOptions& opt, std::ostream& out, std::ostream& err) {
    static const std::vector<std::string> stages{"rectifier", "boost", "charger", "all"};
    if (std::find(stages.begin(), stages.end(), opt.stage) == stages.end()) {
        err << "error: unknown stage '" << opt.stage << "' (expected rectifier, boost, charger or all)\n";
        return exit_usage;
    }
    Config cfg;
    try {
        cfg = load_config_with_overrides(opt.config_path, opt.overrides);
        if (opt.duty) apply_override(cfg, "pwm.duty_boost=" + upsim::detail::format_number(*opt.duty));
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    try {
        const auto& sc = cfg.scenario;
        const auto bp = sc.boost_params();
        const bool all = opt.stage == "all";
        if (all || opt.stage == "rectifier")
            print_tf(out, "rectifier (L_r C_r filter)", rectifier_tf(sc.rectifier), opt.freqs);
        if (all || opt.stage == "boost")
            print_tf(out, "boost (averaged, d = " + fmt(bp.duty) + ")", boost_averaged_tf(bp), opt.freqs);
        if (all || opt.stage == "charger")
            print_tf(out, "charger (rectifier x boost, d = " + fmt(bp.duty) + ")", charger_tf(sc.rectifier, bp),
                     opt.freqs);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_analysis;
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// simulate

namespace detail {

struct Windows {
    std::size_t grid_end;  ///< one past the last grid-available sample, or size
    bool grid_seen;
};

inline Windows locate_windows(const SimulationResult& r) {
    const auto& avail = r.get("grid_available");
    const auto x = avail.samples();
    for (std::size_t i = x.size(); i > 0; --i)
        if (x[i - 1] > 0.5) return {i, true};
    return {x.size(), false};
}

inline std::optional<Waveform> try_window(const Waveform& w, std::size_t end, double f0, int cycles) {
    try {
        return window_ending_at(w, end, f0, cycles);
    } catch (const ArgumentError&) {
        return std::nullopt;
    }
}

inline void write_event_log(std::ostream& out, const SimulationResult& r) {
    double start = std::nan("");
    for (const auto& e : r.events) {
        out << "  " << std::left << std::setw(12) << fmt(e.t, 9) << std::setw(20) << e.kind << e.detail;
        if (e.kind == "transfer_start") start = e.t;
        if (e.kind == "transfer_complete" && !std::isnan(start)) {
            out << " (travel " << fmt((e.t - start) * 1e3, 6) << " ms)";
            start = std::nan("");
        }
        out << std::right << '\n';
    }
    if (r.events.empty()) out << "  (none)\n";
}

}  // namespace detail

/// Run summary: RMS and mean per signal, conduction-mode verdict and the
/// supervisory event log.
inline std::string simulation_summary(const Config& cfg, const SimulationResult& r) {
    const auto& sc = cfg.scenario;
    const int cycles = cfg.analysis.cycles;
    const double f0 = sc.grid.f0;
    const auto win = detail::locate_windows(r);
    std::ostringstream out;
    out << "upsim simulation summary\n";
    out << "  simulated " << fmt(sc.sim.t_end) << " s in " << r.steps << " steps of " << fmt(sc.sim.dt) << " s; "
        << r.factorisations << " distinct switch configurations factorised\n";
    out << "  output sample interval " << fmt(r.waveforms.front().dt()) << " s, " << r.waveforms.front().size()
        << " samples per signal\n\n";

    const auto& any = r.waveforms.front();
    const auto final_win = detail::try_window(any, any.size(), f0, cycles);
    const auto grid_win = win.grid_seen ? detail::try_window(any, win.grid_end, f0, cycles) : std::nullopt;
    out << "Signal statistics over " << cycles << "-cycle windows\n";
    if (grid_win)
        out << "  grid window:  [" << fmt(grid_win->t0(), 9) << ", " << fmt(grid_win->t0() + grid_win->duration(), 9)
            << ") s, last cycles with grid available\n";
    if (final_win)
        out << "  final window: [" << fmt(final_win->t0(), 9) << ", "
            << fmt(final_win->t0() + final_win->duration(), 9) << ") s, end of run\n";
    out << "  " << std::left << std::setw(22) << "signal" << std::setw(14) << "rms (grid)" << std::setw(14)
        << "mean (grid)" << std::setw(14) << "rms (final)" << "mean (final)\n";
    for (const auto& w : r.waveforms) {
        out << "  " << std::setw(22) << w.name();
        for (std::size_t end : {grid_win ? win.grid_end : std::size_t{0}, final_win ? w.size() : std::size_t{0}}) {
            if (end == 0) {
                out << std::setw(14) << "-" << std::setw(14) << "-";
                continue;
            }
            const auto s = window_ending_at(w, end, f0, cycles);
            out << std::setw(14) << fmt(rms(s)) << std::setw(14) << fmt(mean(s));
        }
        out << '\n';
    }
    out << std::right << '\n';

    out << "Boost conduction mode\n";
    if (grid_win) {
        const double v_in = mean(window_ending_at(r.get("rectified_v"), win.grid_end, f0, cycles));
        const auto il = window_ending_at(r.get("boost_inductor_i"), win.grid_end, f0, cycles);
        const auto x = il.samples();
        const double i_min = *std::min_element(x.begin(), x.end());
        out << "  averaged-model input (mean rectified voltage): " << fmt(v_in) << " V\n";
        if (v_in > 0.0) {
            const auto v = ccm_check(sc.boost_params(), v_in);
            out << "  predicted: " << (v.mode == ConductionMode::ccm ? "CCM" : "DCM") << ", I_L " << fmt(v.inductor_current)
                << " A, ripple half-amplitude " << fmt(v.ripple_half) << " A, margin " << fmt(v.margin) << " A\n";
        }
        out << "  simulated: minimum inductor current " << fmt(i_min) << " A -> "
            << (i_min > 0.0 ? "CCM" : "DCM (current reaches zero)") << '\n';
    } else {
        out << "  grid never available; charger idle\n";
    }
    out << '\n';

    out << "Supervisory events\n";
    detail::write_event_log(out, r);
    if (r.transfer_time_warning)
        out << "  warning: transfer time " << fmt(sc.supervisory.transfer_time * 1e3)
            << " ms lies outside the 3-5 ms relay range\n";
    return out.str();
}

struct SimulateOptions {
    std::optional<std::string> config_path;
    std::vector<std::string> overrides;
    std::optional<std::string> out_dir;
};

inline void stage_simulation(StagedOutput& files, const Config& cfg, const SimulationResult& r,
                             const std::string& summary) {
    for (const auto& w : r.waveforms) files.add(w.name() + ".csv", [&](std::ostream& o) { write_csv(o, w); });
    files.add("events.log", [&](std::ostream& o) {
        for (const auto& e : r.events) o << upsim::detail::format_number(e.t) << ' ' << e.kind << ' ' << e.detail << '\n';
    });
    files.add("summary.txt", [&](std::ostream& o) { o << summary; });
    files.add("config.ini", [&](std::ostream& o) { o << render_config(cfg); });
}

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
    Config cfg;
    try {
        cfg = load_config_with_overrides(opt.config_path, opt.overrides);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    try {
        const auto result = simulate(cfg.scenario);
        const auto summary = simulation_summary(cfg, result);
        StagedOutput files(resolve_out_dir(opt.out_dir));
        stage_simulation(files, cfg, result, summary);
        files.commit();
        out << summary << "\nwrote " << result.waveforms.size() << " waveform CSVs to " << files.dir().string()
            << '\n';
    } catch (const std::exception& e) {
        err << "error: simulation failed: " << e.what() << '\n';
        return exit_simulation;
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// analyze

/// Harmonic table (odd orders through max_order plus the even residual) and
/// the performance line.
inline std::string format_report(const Report& r) {
    std::ostringstream out;
    out << "Harmonic analysis (peak magnitudes)\n";
    out << "  mains window [" << fmt(r.windows.mains_start, 9) << ", " << fmt(r.windows.mains_end, 9)
        << ") s, load window [" << fmt(r.windows.load_start, 9) << ", " << fmt(r.windows.load_end, 9) << ") s\n";
    out << "  " << std::left << std::setw(8) << "order" << std::setw(18) << "mains_i [A]" << std::setw(18)
        << "load_v [V]" << "load_i [A]\n";
    for (int k = 1; k <= r.max_order; k += 2)
        out << "  " << std::setw(8) << k << std::setw(18) << fmt(r.mains_i.magnitude(k), 8) << std::setw(18)
            << fmt(r.load_v.magnitude(k), 8) << fmt(r.load_i.magnitude(k), 8) << '\n';
    out << "  " << std::setw(8) << "even" << std::setw(18) << fmt(even_residual(r.mains_i, r.max_order), 8)
        << std::setw(18) << fmt(even_residual(r.load_v, r.max_order), 8)
        << fmt(even_residual(r.load_i, r.max_order), 8) << '\n';
    out << "  (even: root-sum-square of orders 2.." << r.max_order << ")\n\n";

    const auto& p = r.performance;
    out << "Performance\n";
    out << "  " << std::setw(18) << "sending-end PF" << std::setw(18) << "displacement PF" << std::setw(18)
        << "THD mains_i [%]" << std::setw(18) << "THD load_v [%]" << "THD load_i [%]\n";
    out << "  " << std::setw(18) << fmt(p.pf_sending, 6) << std::setw(18) << fmt(p.displacement_pf, 6)
        << std::setw(18) << fmt(p.thd_mains_i, 6) << std::setw(18) << fmt(p.thd_load_v, 6) << fmt(p.thd_load_i, 6)
        << '\n';
    out << "  real power " << fmt(p.p_real) << " W, apparent power " << fmt(p.s_apparent) << " VA\n";
    out << std::right;
    return out.str();
}

inline void write_spectrum(std::ostream& o, const HarmonicSpectrum& s) {
    o << "order,frequency,magnitude,phase\n";
    for (const auto& [k, m] : s.magnitudes)
        o << k << ',' << upsim::detail::format_number(k * s.f0) << ',' << upsim::detail::format_number(m) << ','
          << upsim::detail::format_number(s.phases.at(k)) << '\n';
}

inline void stage_report(StagedOutput& files, const Report& r, const std::string& text) {
    files.add("report.txt", [&](std::ostream& o) { o << text; });
    files.add("spectrum_mains_i.csv", [&](std::ostream& o) { write_spectrum(o, r.mains_i); });
    files.add("spectrum_load_v.csv", [&](std::ostream& o) { write_spectrum(o, r.load_v); });
    files.add("spectrum_load_i.csv", [&](std::ostream& o) { write_spectrum(o, r.load_i); });
}

struct AnalyzeOptions {
    /// Waveform CSV files, or directories holding <signal>.csv files.
    std::vector<std::string> inputs;
    double f0 = 50.0;
    int max_order = 13;
    int cycles = 5;
    std::optional<std::string> out_dir;
};

inline std::vector<Waveform> load_waveforms(const std::vector<std::string>& inputs) {
    static const std::vector<std::string> wanted{"mains_v", "mains_i", "load_v", "load_i", "grid_available"};
    std::vector<Waveform> ws;
    for (const auto& in : inputs) {
        if (std::filesystem::is_directory(in)) {
            for (const auto& name : wanted) {
                const auto path = std::filesystem::path(in) / (name + ".csv");
                if (std::filesystem::exists(path)) ws.push_back(read_csv(path.string()));
            }
        } else {
            ws.push_back(read_csv(in));
        }
    }
    return ws;
}

inline int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out, std::ostream& err) {
    if (opt.inputs.empty()) {
        err << "error: no waveform inputs given\n";
        return exit_usage;
    }
    if (!(opt.f0 > 0.0) || opt.max_order < 1 || opt.cycles < 1) {
        err << "error: f0 must be positive and max-order, cycles at least 1\n";
        return exit_usage;
    }
    try {
        const auto ws = load_waveforms(opt.inputs);
        const auto report = build_report(ws, opt.f0, opt.max_order, opt.cycles);
        const auto text = format_report(report);
        StagedOutput files(resolve_out_dir(opt.out_dir));
        stage_report(files, report, text);
        files.commit();
        out << text;
    } catch (const std::exception& e) {
        err << "error: analysis failed: " << e.what() << '\n';
        return exit_analysis;
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// report

inline int cmd_report(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
    Config cfg;
    try {
        cfg = load_config_with_overrides(opt.config_path, opt.overrides);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    std::optional<SimulationResult> result;
    try {
        result = simulate(cfg.scenario);
    } catch (const std::exception& e) {
        err << "error: simulation failed: " << e.what() << '\n';
        return exit_simulation;
    }
    std::string text;
    std::optional<Report> report;
    try {
        report = build_report(result->waveforms, cfg.scenario.grid.f0, cfg.analysis.max_order, cfg.analysis.cycles);
        text = format_report(*report);
    } catch (const std::exception& e) {
        err << "error: analysis failed: " << e.what() << '\n';
        return exit_analysis;
    }
    try {
        const auto summary = simulation_summary(cfg, *result);
        StagedOutput files(resolve_out_dir(opt.out_dir));
        stage_simulation(files, cfg, *result, summary);
        stage_report(files, *report, text);
        files.commit();
        out << summary << '\n' << text << "\nwrote outputs to " << files.dir().string() << '\n';
    } catch (const std::exception& e) {
        err << "error: writing outputs failed: " << e.what() << '\n';
        return exit_simulation;
    }
    return exit_ok;
}

}  // namespace upsim::cli
