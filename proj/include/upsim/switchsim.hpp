#pragma once

// Switched time-domain simulation of the complete back-up supply:
//
//   grid --+-- Tx1 (step-down) -- diode bridge -- L_r/C_r -- boost -- C_c || R_c
//          |                                                    |
//          |                                      charger relay |
//          |                                                    |
//          |                              battery (ideal source, optional R_int)
//          |                                       | centre tap
//          |                     push-pull legs -- Tx2 (step-up) -- C_o -- L_o
//          |                                                               |
//          +-- CR1 (NO) ------------ moving pole ------------- CR2 (NC) ---+
//                                        |
//                                      R-L load
//
// The inverter output capacitor sits across the Tx2 secondary and L_o runs
// in series towards the changeover relay.

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "upsim/circuit.hpp"
#include "upsim/errors.hpp"
#include "upsim/models.hpp"
#include "upsim/pwm.hpp"
#include "upsim/supervisory.hpp"
#include "upsim/waveform.hpp"

namespace upsim {

struct GridSettings {
    double v_rms = 230.0;
    double f0 = 50.0;
    /// (time, available) breakpoints; availability holds until the next entry.
    std::vector<std::pair<double, bool>> schedule{{0.0, true}, {0.25, false}};

    bool available_at(double t) const {
        bool available = true;
        for (const auto& [t_k, a] : schedule) {
            if (t_k <= t) available = a;
            else break;
        }
        return available;
    }
};

struct BoostStage {
    double l_c = 0.95e-3;
    double c_c = 47e-6;
    double r_c = 10.0;
};

struct BatterySettings {
    double v = 12.0;
    double r_int = 0.0;
};

struct InverterStage {
    double r_on = 0.015;  ///< per-leg on-state resistance
    double r_s = 225.0;   ///< snubber resistance, per switch
    double c_s = 10e-9;   ///< snubber capacitance, per switch
};

struct OutputFilter {
    double l_o = 21.2e-3;
    double c_o = 470e-6;
};

struct LoadSettings {
    double r = 500.0;
    double l = 27e-3;
};

struct PwmSettings {
    double f_boost = 40e3;
    double duty_boost = 0.5;
    double f_inv = 50.0;
    double duty_inv = 0.5;
    /// Applied to the complementary inverter pair only.
    double dead_time = 2e-6;
};

struct DeviceSettings {
    double boost_switch_r_on = 1e-3;
    double diode_r_on = 1e-3;
    double relay_r_on = 1e-3;
    double r_off = 1e6;
};

struct SupervisorySettings {
    double transfer_time = 4e-3;
    double v_ref = 12.0;
    double v_sat = 12.0;
    double hysteresis = 0.0;
};

/// Charger-relay driver components. Carried for completeness; the relay is
/// modelled behaviourally so they set no dynamics.
struct RelayDriver {
    double r_r1 = 1e3;
    double r_r2 = 12e3;
    double c_sr = 10e-9;
    double v_dd = 12.0;
};

struct SimSettings {
    double t_end = 0.5;
    double dt = 250e-9;
    /// Recording interval; an integer multiple of dt.
    double output_dt = 5e-6;
};

struct Scenario {
    GridSettings grid;
    double tx1_ratio = 230.0 / 12.0;  ///< primary:secondary (step-down)
    RectifierParams rectifier{0.1e-3, 500e-6};
    BoostStage boost;
    BatterySettings battery;
    InverterStage inverter;
    double tx2_ratio = 230.0 / 12.0;  ///< secondary:half-primary (step-up)
    OutputFilter output_filter;
    LoadSettings load;
    PwmSettings pwm;
    DeviceSettings devices;
    SupervisorySettings supervisory;
    RelayDriver relay_driver;
    SimSettings sim;

    BoostParams boost_params() const {
        return {boost.l_c, boost.c_c, boost.r_c, pwm.duty_boost, pwm.f_boost};
    }

    int decimation() const { return static_cast<int>(std::llround(sim.output_dt / sim.dt)); }

    /// Throws ArgumentError naming the first offending field.
    void validate() const {
        auto positive = [](double v, const char* field) {
            if (!(v > 0.0)) throw ArgumentError(std::string(field) + " must be positive");
        };
        auto non_negative = [](double v, const char* field) {
            if (!(v >= 0.0)) throw ArgumentError(std::string(field) + " must be non-negative");
        };
        non_negative(grid.v_rms, "grid.v_rms");
        positive(grid.f0, "grid.f0");
        for (std::size_t k = 1; k < grid.schedule.size(); ++k)
            if (grid.schedule[k].first < grid.schedule[k - 1].first)
                throw ArgumentError("grid.schedule must be sorted by time");
        positive(tx1_ratio, "rectifier.tx1_ratio");
        positive(rectifier.l_r, "rectifier.l_r");
        positive(rectifier.c_r, "rectifier.c_r");
        positive(boost.l_c, "boost.l_c");
        positive(boost.c_c, "boost.c_c");
        positive(boost.r_c, "boost.r_c");
        non_negative(battery.v, "battery.v");
        non_negative(battery.r_int, "battery.r_int");
        positive(inverter.r_on, "inverter.r_on");
        positive(inverter.r_s, "inverter.r_s");
        positive(inverter.c_s, "inverter.c_s");
        positive(tx2_ratio, "inverter.tx2_ratio");
        positive(output_filter.l_o, "filter.l_o");
        positive(output_filter.c_o, "filter.c_o");
        positive(load.r, "load.r");
        positive(load.l, "load.l");
        positive(pwm.f_boost, "pwm.f_boost");
        positive(pwm.f_inv, "pwm.f_inv");
        if (!(pwm.duty_boost >= 0.0 && pwm.duty_boost < 1.0)) throw ArgumentError("pwm.duty_boost must lie in [0, 1)");
        if (!(pwm.duty_inv > 0.0 && pwm.duty_inv <= 1.0)) throw ArgumentError("pwm.duty_inv must lie in (0, 1]");
        const double min_period = 1.0 / std::max(pwm.f_boost, pwm.f_inv);
        if (!(pwm.dead_time >= 0.0 && pwm.dead_time < min_period / 2.0))
            throw ArgumentError("pwm.dead_time must lie in [0, min period / 2)");
        positive(devices.boost_switch_r_on, "devices.boost_switch_r_on");
        positive(devices.diode_r_on, "devices.diode_r_on");
        positive(devices.relay_r_on, "devices.relay_r_on");
        if (!(devices.r_off > 1e3 * std::max({devices.boost_switch_r_on, devices.diode_r_on, inverter.r_on})))
            throw ArgumentError("devices.r_off must exceed every on-resistance by at least 1e3");
        positive(supervisory.transfer_time, "supervisory.transfer_time");
        positive(supervisory.v_ref, "supervisory.v_ref");
        positive(supervisory.v_sat, "supervisory.v_sat");
        non_negative(supervisory.hysteresis, "supervisory.hysteresis");
        positive(sim.dt, "sim.dt");
        if (sim.dt > 1.0 / (20.0 * pwm.f_boost) * (1.0 + 1e-9))
            throw ArgumentError("sim.dt must give at least 20 samples per boost switching period");
        if (sim.t_end < 10.0 / grid.f0 * (1.0 - 1e-9))
            throw ArgumentError("sim.t_end must cover at least 10 fundamental cycles");
        positive(sim.output_dt, "sim.output_dt");
        const double ratio = sim.output_dt / sim.dt;
        if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-6 * ratio)
            throw ArgumentError("sim.output_dt must be an integer multiple of sim.dt");
    }
};

struct SupervisoryEvent {
    double t;
    std::string kind;    ///< grid_lost, grid_restored, transfer_start, transfer_complete, charger_connect, charger_disconnect
    std::string detail;
};

struct SimulationResult {
    std::vector<Waveform> waveforms;
    std::vector<SupervisoryEvent> events;
    bool transfer_time_warning = false;
    std::uint64_t steps = 0;
    std::size_t factorisations = 0;

    const Waveform& get(const std::string& name) const {
        for (const auto& w : waveforms)
            if (w.name() == name) return w;
        throw ArgumentError("no waveform named '" + name + "'");
    }
};

namespace detail {

/// Accumulates named channels sample by sample.
class Recorder {
public:
    Recorder(std::vector<std::string> names, std::size_t reserve) : names_(std::move(names)), data_(names_.size()) {
        for (auto& d : data_) d.reserve(reserve);
    }
    void push(std::initializer_list<double> values) {
        std::size_t k = 0;
        for (double v : values) data_[k++].push_back(v);
    }
    std::vector<Waveform> finish(double dt, double t0) {
        std::vector<Waveform> out;
        for (std::size_t k = 0; k < names_.size(); ++k) out.emplace_back(names_[k], dt, t0, std::move(data_[k]));
        return out;
    }

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> data_;
};

}  // namespace detail

/// Names of the waveforms produced by simulate(), in output order.
inline const std::vector<std::string>& simulation_signal_names() {
    static const std::vector<std::string> names{
        "mains_v",          "mains_i",          "rectified_v",     "rectifier_inductor_i", "battery_charge_v",
        "boost_inductor_i", "boost_inductor_v", "boost_switch_i",  "boost_diode_i",        "boost_cap_i",
        "boost_out_i",      "battery_v",        "battery_i",       "inverter_in_i",        "inverter_leg1_i",
        "inverter_leg2_i",  "inverter_out_v",   "load_v",          "load_i",               "load_p",
        "grid_available",   "transfer_pole",    "transfer_open",   "charger_connected"};
    return names;
}

/// Runs the full system from an all-zero initial state.
inline SimulationResult simulate(const Scenario& sc) {
    sc.validate();
    using namespace circuit;
    const double r_off = sc.devices.r_off;
    const double d_on = sc.devices.diode_r_on;

    Netlist net;
    // Grid and charger.
    const Node g = net.add_node("grid");
    const Node a1 = net.add_node("tx1_a");
    const Node b1 = net.add_node("tx1_b");
    const Node rp = net.add_node("bridge_out");
    const Node cr = net.add_node("rect_cap");
    const Node sw = net.add_node("boost_sw");
    const Node out = net.add_node("boost_out");
    const Node bp = net.add_node("battery_pos");
    const SourceId grid_src = net.voltage_source(g, Netlist::ground);
    net.transformer(g, Netlist::ground, a1, b1, 1.0 / sc.tx1_ratio);
    net.diode(a1, rp, d_on, r_off);
    net.diode(b1, rp, d_on, r_off);
    net.diode(Netlist::ground, a1, d_on, r_off);
    net.diode(Netlist::ground, b1, d_on, r_off);
    const InductorId l_r = net.inductor(rp, cr, sc.rectifier.l_r);
    net.capacitor(cr, Netlist::ground, sc.rectifier.c_r);
    const InductorId l_c = net.inductor(cr, sw, sc.boost.l_c);
    const SwitchId q_c = net.switch_(sw, Netlist::ground, sc.devices.boost_switch_r_on, r_off);
    const DiodeId d_c = net.diode(sw, out, d_on, r_off);
    const CapacitorId c_c = net.capacitor(out, Netlist::ground, sc.boost.c_c);
    const ResistorId r_c = net.resistor(out, Netlist::ground, sc.boost.r_c);
    const SwitchId ccr = net.switch_(out, bp, sc.devices.relay_r_on, r_off);

    // Battery.
    SourceId bat_src;
    std::optional<ResistorId> r_int;
    if (sc.battery.r_int > 0.0) {
        const Node bs = net.add_node("battery_emf");
        bat_src = net.voltage_source(bs, Netlist::ground);
        r_int = net.resistor(bs, bp, sc.battery.r_int);
    } else {
        bat_src = net.voltage_source(bp, Netlist::ground);
    }

    // Push-pull inverter with centre-tapped Tx2.
    const Node p1 = net.add_node("leg1");
    const Node p2 = net.add_node("leg2");
    const Node s = net.add_node("inv_out");
    const TransformerId tx2a = net.transformer(bp, p1, s, Netlist::ground, sc.tx2_ratio);
    const TransformerId tx2b = net.transformer(p2, bp, s, Netlist::ground, sc.tx2_ratio);
    const SwitchId leg1 = net.switch_(p1, Netlist::ground, sc.inverter.r_on, r_off);
    const SwitchId leg2 = net.switch_(p2, Netlist::ground, sc.inverter.r_on, r_off);
    const DiodeId leg1_d = net.diode(Netlist::ground, p1, d_on, r_off);
    const DiodeId leg2_d = net.diode(Netlist::ground, p2, d_on, r_off);
    for (Node leg : {p1, p1, p2, p2}) {
        const Node mid = net.add_node("snubber");
        net.resistor(leg, mid, sc.inverter.r_s);
        net.capacitor(mid, Netlist::ground, sc.inverter.c_s);
    }
    net.capacitor(s, Netlist::ground, sc.output_filter.c_o);
    const Node inv = net.add_node("filter_out");
    net.inductor(s, inv, sc.output_filter.l_o);

    // Changeover relay and load.
    const Node ld = net.add_node("load");
    const Node lm = net.add_node("load_mid");
    const SwitchId cr1 = net.switch_(g, ld, sc.devices.relay_r_on, r_off);
    const SwitchId cr2 = net.switch_(inv, ld, sc.devices.relay_r_on, r_off);
    net.resistor(ld, lm, sc.load.r);
    const InductorId l_load = net.inductor(lm, Netlist::ground, sc.load.l);

    TransientSolver solver(std::move(net), sc.sim.dt);

    const PwmPair boost_pwm(sc.pwm.f_boost, sc.pwm.duty_boost, 0.0);
    const PwmPair inv_pwm(sc.pwm.f_inv, sc.pwm.duty_inv, sc.pwm.dead_time);
    const double tol = 1e-6 * sc.sim.dt;
    const double omega = 2.0 * std::numbers::pi * sc.grid.f0;
    const double v_peak = std::sqrt(2.0) * sc.grid.v_rms;

    const auto steps = static_cast<std::uint64_t>(std::llround(sc.sim.t_end / sc.sim.dt));
    const auto dec = static_cast<std::uint64_t>(sc.decimation());
    detail::Recorder rec(simulation_signal_names(), static_cast<std::size_t>(steps / dec) + 1);

    SimulationResult result;
    auto ts = TransferSwitchState::initial(sc.grid.available_at(0.0));
    ChargeControllerState cc{sc.supervisory.v_ref, sc.supervisory.v_sat, false, sc.supervisory.hysteresis};
    cc = charge_controller_step(cc, sc.battery.v);
    if (cc.connected) result.events.push_back({0.0, "charger_connect", ""});
    double v_bat = sc.battery.v;

    for (std::uint64_t n = 1; n <= steps; ++n) {
        const double t = static_cast<double>(n) * sc.sim.dt;
        const bool grid_ok = sc.grid.available_at(t);

        const auto prev = ts;
        ts = transfer_switch_step(ts, grid_ok, t, sc.supervisory.transfer_time);
        if (ts.energized != prev.energized) {
            result.events.push_back({t, grid_ok ? "grid_restored" : "grid_lost", ""});
            result.events.push_back({t, "transfer_start", to_string(ts.pending->target)});
        }
        if (ts.pole != prev.pole && ts.pole != Pole::open)
            result.events.push_back({t, "transfer_complete", to_string(ts.pole)});

        const bool was_connected = cc.connected;
        cc = charge_controller_step(cc, v_bat);
        if (cc.connected != was_connected)
            result.events.push_back({t, cc.connected ? "charger_connect" : "charger_disconnect", ""});

        solver.set_source(grid_src, grid_ok ? v_peak * std::sin(omega * t) : 0.0);
        solver.set_source(bat_src, sc.battery.v);
        solver.set_gate(q_c, boost_pwm.at(t, tol).high);
        const auto legs = inv_pwm.at(t, tol);
        solver.set_gate(leg1, legs.high);
        solver.set_gate(leg2, legs.low);
        solver.set_gate(ccr, cc.connected);
        solver.set_gate(cr1, ts.pole == Pole::grid);
        solver.set_gate(cr2, ts.pole == Pole::inverter);
        solver.step();

        // An ideal battery holds its terminal at the EMF exactly.
        v_bat = r_int ? solver.voltage(bp) : sc.battery.v;
        if (n % dec != 0) continue;

        const double i_load = solver.inductor_current(l_load);
        const double v_load = solver.voltage(ld);
        const double i_bat = r_int ? solver.resistor_current(*r_int) : solver.source_current(bat_src);
        rec.push({
            solver.voltage(g),
            solver.source_current(grid_src),
            solver.voltage(cr),
            solver.inductor_current(l_r),
            solver.voltage(out),
            solver.inductor_current(l_c),
            solver.inductor_voltage(l_c),
            solver.switch_current(q_c),
            solver.diode_current(d_c),
            solver.capacitor_current(c_c),
            solver.resistor_current(r_c) + solver.switch_current(ccr),
            v_bat,
            i_bat,
            solver.transformer_primary_current(tx2a) - solver.transformer_primary_current(tx2b),
            solver.switch_current(leg1) - solver.diode_current(leg1_d),
            solver.switch_current(leg2) - solver.diode_current(leg2_d),
            solver.voltage(s),
            v_load,
            i_load,
            v_load * i_load,
            grid_ok ? 1.0 : 0.0,
            ts.pole == Pole::inverter ? 1.0 : 0.0,
            ts.pole == Pole::open ? 1.0 : 0.0,
            cc.connected ? 1.0 : 0.0,
        });
    }

    const double out_dt = sc.sim.dt * static_cast<double>(dec);
    result.waveforms = rec.finish(out_dt, out_dt);
    result.transfer_time_warning = ts.travel_time_warning;
    result.steps = steps;
    result.factorisations = solver.cached_factorisations();
    return result;
}

// ---------------------------------------------------------------------------

struct BoostStageRun {
    BoostParams params;
    double v_in = 12.0;
    double t_end = 20e-3;
    double dt = 250e-9;
    double switch_r_on = 1e-3;
    double diode_r_on = 1e-3;
    double r_off = 1e6;
    int record_every = 1;
};

/// Boost converter alone, fed from an ideal dc source, for checking the
/// switched network against the averaged model.
inline std::vector<Waveform> simulate_boost_stage(const BoostStageRun& run) {
    run.params.validate();
    if (!(run.dt > 0.0) || run.dt > 1.0 / (20.0 * run.params.f_sw) * (1.0 + 1e-9))
        throw ArgumentError("dt must give at least 20 samples per switching period");
    if (run.record_every < 1) throw ArgumentError("record_every must be at least 1");
    using namespace circuit;
    Netlist net;
    const Node in = net.add_node("in");
    const Node sw = net.add_node("sw");
    const Node out = net.add_node("out");
    const SourceId src = net.voltage_source(in, Netlist::ground);
    const InductorId l = net.inductor(in, sw, run.params.l_c);
    const SwitchId q = net.switch_(sw, Netlist::ground, run.switch_r_on, run.r_off);
    const DiodeId d = net.diode(sw, out, run.diode_r_on, run.r_off);
    const CapacitorId c = net.capacitor(out, Netlist::ground, run.params.c_c);
    const ResistorId r = net.resistor(out, Netlist::ground, run.params.r_c);
    TransientSolver solver(std::move(net), run.dt);

    const PwmPair pwm(run.params.f_sw, run.params.duty, 0.0);
    const double tol = 1e-6 * run.dt;
    const auto steps = static_cast<std::uint64_t>(std::llround(run.t_end / run.dt));
    detail::Recorder rec({"input_v", "inductor_i", "inductor_v", "switch_i", "diode_i", "cap_i", "output_v", "out_i"},
                         static_cast<std::size_t>(steps / static_cast<std::uint64_t>(run.record_every)) + 1);
    for (std::uint64_t n = 1; n <= steps; ++n) {
        const double t = static_cast<double>(n) * run.dt;
        solver.set_source(src, run.v_in);
        solver.set_gate(q, pwm.at(t, tol).high);
        solver.step();
        if (n % static_cast<std::uint64_t>(run.record_every) != 0) continue;
        rec.push({run.v_in, solver.inductor_current(l), solver.inductor_voltage(l), solver.switch_current(q),
                  solver.diode_current(d), solver.capacitor_current(c), solver.voltage(out),
                  solver.resistor_current(r)});
    }
    const double out_dt = run.dt * run.record_every;
    return rec.finish(out_dt, out_dt);
}

}  // namespace upsim
