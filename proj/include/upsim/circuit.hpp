#pragma once

// Fixed-step transient engine for piecewise-linear switched networks.
//
// The network is described by a Netlist of two-terminal elements, ideal
// voltage sources and ideal transformers. Every step assembles a modified
// nodal analysis (MNA) system in which capacitors and inductors are replaced
// by their companion conductance + history source. Switches and diodes are
// two-valued resistors; diode states are resolved per step by iterating to a
// fixed point. Trapezoidal integration is used while the switch
// configuration is unchanged and a single backward-Euler step is taken on
// every configuration change, which damps the numerical ringing trapezoidal
// rule produces at current/voltage discontinuities.
//
// LU factorisations are cached per (configuration, method) pair, so a run
// only refactorises when it visits a new switch state.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "upsim/errors.hpp"

namespace upsim::circuit {

struct Node {
    int index = 0;  // 0 is ground
    friend bool operator==(Node, Node) = default;
};

struct ResistorId { int index; };
struct CapacitorId { int index; };
struct InductorId { int index; };
struct SourceId { int index; };
struct TransformerId { int index; };
struct SwitchId { int index; };
struct DiodeId { int index; };

class Netlist {
public:
    static constexpr Node ground{0};

    Node add_node(std::string name) {
        names_.push_back(std::move(name));
        return Node{static_cast<int>(names_.size())};
    }

    ResistorId resistor(Node a, Node b, double r) {
        require(r > 0.0, "resistance must be positive");
        resistors_.push_back({a, b, 1.0 / r});
        return {static_cast<int>(resistors_.size()) - 1};
    }

    CapacitorId capacitor(Node a, Node b, double c) {
        require(c > 0.0, "capacitance must be positive");
        capacitors_.push_back({a, b, c});
        return {static_cast<int>(capacitors_.size()) - 1};
    }

    InductorId inductor(Node a, Node b, double l) {
        require(l > 0.0, "inductance must be positive");
        inductors_.push_back({a, b, l});
        return {static_cast<int>(inductors_.size()) - 1};
    }

    /// Ideal source holding V(pos) - V(neg); its value is set per step.
    SourceId voltage_source(Node pos, Node neg) {
        sources_.push_back({pos, neg});
        return {static_cast<int>(sources_.size()) - 1};
    }

    /// Ideal transformer: V(s+) - V(s-) = ratio * (V(p+) - V(p-)), with
    /// ampere-turn balance. ratio is secondary/primary turns.
    TransformerId transformer(Node p_pos, Node p_neg, Node s_pos, Node s_neg, double ratio) {
        require(ratio > 0.0, "transformer ratio must be positive");
        transformers_.push_back({p_pos, p_neg, s_pos, s_neg, ratio});
        return {static_cast<int>(transformers_.size()) - 1};
    }

    /// Externally gated switch: r_on when gated, r_off otherwise.
    SwitchId switch_(Node a, Node b, double r_on, double r_off) {
        require(r_on > 0.0 && r_off > r_on, "switch needs 0 < r_on < r_off");
        switches_.push_back({a, b, 1.0 / r_on, 1.0 / r_off});
        return {static_cast<int>(switches_.size()) - 1};
    }

    /// Ideal diode approximated by r_on / r_off; conducts anode -> cathode.
    DiodeId diode(Node anode, Node cathode, double r_on, double r_off) {
        require(r_on > 0.0 && r_off > r_on, "diode needs 0 < r_on < r_off");
        diodes_.push_back({anode, cathode, 1.0 / r_on, 1.0 / r_off});
        return {static_cast<int>(diodes_.size()) - 1};
    }

    int node_count() const noexcept { return static_cast<int>(names_.size()); }
    const std::string& node_name(Node n) const { return names_.at(static_cast<std::size_t>(n.index - 1)); }

private:
    friend class TransientSolver;

    struct TwoTerminal {
        Node a, b;
        double value;
    };
    struct Source {
        Node pos, neg;
    };
    struct Transformer {
        Node p_pos, p_neg, s_pos, s_neg;
        double ratio;
    };
    struct Switched {
        Node a, b;
        double g_on, g_off;
    };

    static void require(bool ok, const char* what) {
        if (!ok) throw ArgumentError(what);
    }

    std::vector<std::string> names_;
    std::vector<TwoTerminal> resistors_;   // value = conductance
    std::vector<TwoTerminal> capacitors_;  // value = capacitance
    std::vector<TwoTerminal> inductors_;   // value = inductance
    std::vector<Source> sources_;
    std::vector<Transformer> transformers_;
    std::vector<Switched> switches_;
    std::vector<Switched> diodes_;
};

class TransientSolver {
public:
    TransientSolver(Netlist net, double dt) : net_(std::move(net)), dt_(dt) {
        if (!(dt > 0.0)) throw ArgumentError("time step must be positive");
        if (net_.switches_.size() + net_.diodes_.size() > 62)
            throw ArgumentError("too many switching elements for one network");
        nodes_ = net_.node_count();
        size_ = nodes_ + static_cast<int>(net_.sources_.size() + net_.transformers_.size());
        x_ = Eigen::VectorXd::Zero(size_);
        rhs_ = Eigen::VectorXd::Zero(size_);
        source_values_.assign(net_.sources_.size(), 0.0);
        gates_.assign(net_.switches_.size(), false);
        diode_on_.assign(net_.diodes_.size(), false);
        cap_v_.assign(net_.capacitors_.size(), 0.0);
        cap_i_.assign(net_.capacitors_.size(), 0.0);
        ind_v_.assign(net_.inductors_.size(), 0.0);
        ind_i_.assign(net_.inductors_.size(), 0.0);
        const auto nd = net_.diodes_.size();
        max_iterations_ = nd >= 20 ? (1 << 20) : std::max(8, 1 << nd);
        prev_config_ = configuration();
    }

    double dt() const noexcept { return dt_; }
    double time() const noexcept { return static_cast<double>(steps_) * dt_; }
    std::uint64_t steps() const noexcept { return steps_; }

    void set_source(SourceId id, double value) { source_values_.at(static_cast<std::size_t>(id.index)) = value; }
    void set_gate(SwitchId id, bool on) { gates_.at(static_cast<std::size_t>(id.index)) = on; }

    /// Seeds a capacitor voltage before the first step.
    void set_initial_voltage(CapacitorId id, double v) { cap_v_.at(static_cast<std::size_t>(id.index)) = v; }
    void set_initial_current(InductorId id, double i) { ind_i_.at(static_cast<std::size_t>(id.index)) = i; }

    /// Advances the network by one step to time() + dt using the current
    /// source values and gate states.
    ///
    /// The previous diode states are tried first with the trapezoidal rule.
    /// If they are inconsistent (or a gate changed), diode states are searched
    /// with backward-Euler companions only, so every candidate is judged by
    /// the same discretisation: the first pass flips all violating diodes,
    /// later passes flip the single worst violator.
    void step() {
        std::uint64_t cfg = configuration();
        if (cfg == prev_config_ && steps_ > 0) {
            solve(cfg, false);
            if (diode_violations(Flip::none) == 0) {
                commit(false);
                return;
            }
        }
        for (int iter = 0;; ++iter) {
            if (iter >= max_iterations_)
                throw SimulationError("diode states did not converge at step " + std::to_string(steps_ + 1) +
                                      " (t = " + std::to_string(time() + dt_) + " s)");
            solve(cfg, true);
            if (diode_violations(iter == 0 ? Flip::all : Flip::worst) == 0) {
                commit(true);
                prev_config_ = cfg;
                return;
            }
            cfg = configuration();
        }
    }

    double voltage(Node n) const { return n.index == 0 ? 0.0 : x_[n.index - 1]; }

    double capacitor_voltage(CapacitorId id) const { return cap_v_[static_cast<std::size_t>(id.index)]; }
    double capacitor_current(CapacitorId id) const { return cap_i_[static_cast<std::size_t>(id.index)]; }
    double inductor_current(InductorId id) const { return ind_i_[static_cast<std::size_t>(id.index)]; }
    double inductor_voltage(InductorId id) const { return ind_v_[static_cast<std::size_t>(id.index)]; }

    double resistor_current(ResistorId id) const {
        const auto& r = net_.resistors_[static_cast<std::size_t>(id.index)];
        return branch_voltage(r.a, r.b) * r.value;
    }
    double switch_current(SwitchId id) const {
        const auto k = static_cast<std::size_t>(id.index);
        const auto& s = net_.switches_[k];
        return branch_voltage(s.a, s.b) * (gates_[k] ? s.g_on : s.g_off);
    }
    double diode_current(DiodeId id) const {
        const auto k = static_cast<std::size_t>(id.index);
        const auto& d = net_.diodes_[k];
        return branch_voltage(d.a, d.b) * (diode_on_[k] ? d.g_on : d.g_off);
    }
    bool diode_conducting(DiodeId id) const { return diode_on_[static_cast<std::size_t>(id.index)]; }

    /// Current delivered by the source out of its positive terminal.
    double source_current(SourceId id) const { return -x_[nodes_ + id.index]; }

    /// Current flowing into the primary positive terminal.
    double transformer_primary_current(TransformerId id) const {
        return x_[nodes_ + static_cast<int>(net_.sources_.size()) + id.index];
    }

    std::size_t cached_factorisations() const noexcept { return cache_.size(); }

private:
    std::uint64_t configuration() const {
        std::uint64_t cfg = 0;
        std::size_t bit = 0;
        for (bool g : gates_) cfg |= static_cast<std::uint64_t>(g) << bit++;
        for (bool d : diode_on_) cfg |= static_cast<std::uint64_t>(d) << bit++;
        return cfg;
    }

    double branch_voltage(Node a, Node b) const { return voltage(a) - voltage(b); }

    enum class Flip { none, worst, all };

    /// Counts diodes whose state contradicts the current solution and toggles
    /// none, the worst (largest equivalent current) or all of the violators.
    int diode_violations(Flip flip) {
        constexpr double v_tol = 1e-9;
        constexpr double i_tol = 1e-9;
        int count = 0;
        std::size_t worst = 0;
        double worst_severity = 0.0;
        for (std::size_t k = 0; k < net_.diodes_.size(); ++k) {
            const auto& d = net_.diodes_[k];
            const double v = branch_voltage(d.a, d.b);
            double severity = 0.0;
            if (diode_on_[k]) {
                const double i = v * d.g_on;
                if (i < -i_tol) severity = -i;
            } else if (v > v_tol) {
                severity = v * d.g_on;
            }
            if (severity <= 0.0) continue;
            ++count;
            if (flip == Flip::all) diode_on_[k] = !diode_on_[k];
            if (severity > worst_severity) {
                worst_severity = severity;
                worst = k;
            }
        }
        if (count > 0 && flip == Flip::worst) diode_on_[worst] = !diode_on_[worst];
        return count;
    }

    double cap_conductance(std::size_t k, bool be) const {
        return (be ? 1.0 : 2.0) * net_.capacitors_[k].value / dt_;
    }
    double ind_conductance(std::size_t k, bool be) const {
        return (be ? 1.0 : 0.5) * dt_ / net_.inductors_[k].value;
    }

    // Element current a->b is g * v_ab + h; h is the history term.
    double cap_history(std::size_t k, bool be) const {
        const double g = cap_conductance(k, be);
        return be ? -g * cap_v_[k] : -(g * cap_v_[k] + cap_i_[k]);
    }
    double ind_history(std::size_t k, bool be) const {
        const double g = ind_conductance(k, be);
        return be ? ind_i_[k] : ind_i_[k] + g * ind_v_[k];
    }

    const Eigen::PartialPivLU<Eigen::MatrixXd>& factorisation(std::uint64_t cfg, bool be) {
        const std::uint64_t key = (cfg << 1) | static_cast<std::uint64_t>(be);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;

        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size_, size_);
        auto stamp_g = [&](Node a, Node b, double g) {
            if (a.index) m(a.index - 1, a.index - 1) += g;
            if (b.index) m(b.index - 1, b.index - 1) += g;
            if (a.index && b.index) {
                m(a.index - 1, b.index - 1) -= g;
                m(b.index - 1, a.index - 1) -= g;
            }
        };
        for (int i = 0; i < nodes_; ++i) m(i, i) += gmin_;
        for (const auto& r : net_.resistors_) stamp_g(r.a, r.b, r.value);
        for (std::size_t k = 0; k < net_.capacitors_.size(); ++k)
            stamp_g(net_.capacitors_[k].a, net_.capacitors_[k].b, cap_conductance(k, be));
        for (std::size_t k = 0; k < net_.inductors_.size(); ++k)
            stamp_g(net_.inductors_[k].a, net_.inductors_[k].b, ind_conductance(k, be));
        std::size_t bit = 0;
        for (const auto& s : net_.switches_) stamp_g(s.a, s.b, (cfg >> bit++) & 1 ? s.g_on : s.g_off);
        for (const auto& d : net_.diodes_) stamp_g(d.a, d.b, (cfg >> bit++) & 1 ? d.g_on : d.g_off);

        auto couple = [&](Node n, int row, double k) {
            if (!n.index) return;
            m(n.index - 1, row) += k;  // branch current leaving node n
            m(row, n.index - 1) += k;
        };
        int row = nodes_;
        for (const auto& s : net_.sources_) {
            couple(s.pos, row, 1.0);
            couple(s.neg, row, -1.0);
            ++row;
        }
        for (const auto& t : net_.transformers_) {
            // Unknown: primary current i_p into p+. Secondary carries -i_p/ratio into s+.
            if (t.p_pos.index) m(t.p_pos.index - 1, row) += 1.0;
            if (t.p_neg.index) m(t.p_neg.index - 1, row) -= 1.0;
            if (t.s_pos.index) m(t.s_pos.index - 1, row) -= 1.0 / t.ratio;
            if (t.s_neg.index) m(t.s_neg.index - 1, row) += 1.0 / t.ratio;
            // Constraint: V(s+) - V(s-) - ratio (V(p+) - V(p-)) = 0.
            if (t.s_pos.index) m(row, t.s_pos.index - 1) += 1.0;
            if (t.s_neg.index) m(row, t.s_neg.index - 1) -= 1.0;
            if (t.p_pos.index) m(row, t.p_pos.index - 1) -= t.ratio;
            if (t.p_neg.index) m(row, t.p_neg.index - 1) += t.ratio;
            ++row;
        }
        return cache_.emplace(key, Eigen::PartialPivLU<Eigen::MatrixXd>(m)).first->second;
    }

    void solve(std::uint64_t cfg, bool be) {
        const auto& lu = factorisation(cfg, be);
        rhs_.setZero();
        auto inject = [&](Node a, Node b, double h) {
            if (a.index) rhs_[a.index - 1] -= h;
            if (b.index) rhs_[b.index - 1] += h;
        };
        for (std::size_t k = 0; k < net_.capacitors_.size(); ++k)
            inject(net_.capacitors_[k].a, net_.capacitors_[k].b, cap_history(k, be));
        for (std::size_t k = 0; k < net_.inductors_.size(); ++k)
            inject(net_.inductors_[k].a, net_.inductors_[k].b, ind_history(k, be));
        for (std::size_t k = 0; k < source_values_.size(); ++k) rhs_[nodes_ + static_cast<int>(k)] = source_values_[k];
        x_.noalias() = lu.solve(rhs_);
    }

    void commit(bool be) {
        for (std::size_t k = 0; k < net_.capacitors_.size(); ++k) {
            const auto& c = net_.capacitors_[k];
            const double v = branch_voltage(c.a, c.b);
            cap_i_[k] = cap_conductance(k, be) * v + cap_history(k, be);
            cap_v_[k] = v;
        }
        for (std::size_t k = 0; k < net_.inductors_.size(); ++k) {
            const auto& l = net_.inductors_[k];
            const double v = branch_voltage(l.a, l.b);
            ind_i_[k] = ind_conductance(k, be) * v + ind_history(k, be);
            ind_v_[k] = v;
        }
        ++steps_;
    }

    Netlist net_;
    double dt_;
    double gmin_ = 1e-12;
    int nodes_ = 0;
    int size_ = 0;
    int max_iterations_ = 8;
    std::uint64_t steps_ = 0;
    std::uint64_t prev_config_ = 0;

    Eigen::VectorXd x_;
    Eigen::VectorXd rhs_;
    std::vector<double> source_values_;
    std::vector<bool> gates_;
    std::vector<bool> diode_on_;
    std::vector<double> cap_v_, cap_i_, ind_v_, ind_i_;
    std::unordered_map<std::uint64_t, Eigen::PartialPivLU<Eigen::MatrixXd>> cache_;
};

}  // namespace upsim::circuit
