#pragma once

// Averaged converter models and closed-form steady-state results for the
// battery charger (diode rectifier + LC filter, boost stage) and the
// push-pull inverter.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

#include "upsim/errors.hpp"
#include "upsim/sstf.hpp"

namespace upsim {

struct RectifierParams {
    double l_r;  ///< filter inductance [H]
    double c_r;  ///< filter capacitance [F]

    void validate() const {
        if (!(l_r > 0.0)) throw ArgumentError("rectifier l_r must be positive");
        if (!(c_r > 0.0)) throw ArgumentError("rectifier c_r must be positive");
    }
};

struct BoostParams {
    double l_c;   ///< inductance [H]
    double c_c;   ///< output capacitance [F]
    double r_c;   ///< load resistance [ohm]
    double duty;  ///< switch duty ratio, 0 <= d < 1 (0 leaves the switch open)
    double f_sw;  ///< switching frequency [Hz]

    void validate() const {
        if (!(l_c > 0.0)) throw ArgumentError("boost l_c must be positive");
        if (!(c_c > 0.0)) throw ArgumentError("boost c_c must be positive");
        if (!(r_c > 0.0)) throw ArgumentError("boost r_c must be positive");
        if (!(duty >= 0.0 && duty < 1.0)) throw ArgumentError("boost duty must lie in [0, 1)");
        if (!(f_sw > 0.0)) throw ArgumentError("boost f_sw must be positive");
    }
};

struct InverterParams {
    double n;     ///< transformer turns ratio, secondary/primary
    double duty;  ///< leg duty ratio, 0 < d <= 1
    double r_on;  ///< leg on-state resistance [ohm]
    double r_i;   ///< input port resistance V_i / I_i [ohm]
    double r_o;   ///< output load resistance [ohm]
    double f_sw;  ///< switching frequency [Hz]

    void validate() const {
        if (!(n > 0.0)) throw ArgumentError("inverter n must be positive");
        if (!(duty > 0.0 && duty <= 1.0)) throw ArgumentError("inverter duty must lie in (0, 1]");
        if (!(r_on >= 0.0)) throw ArgumentError("inverter r_on must be non-negative");
        if (!(r_i > 0.0)) throw ArgumentError("inverter r_i must be positive");
        if (!(r_o > 0.0)) throw ArgumentError("inverter r_o must be positive");
        if (!(f_sw > 0.0)) throw ArgumentError("inverter f_sw must be positive");
    }
};

enum class Polarity { positive, negative };
enum class Subinterval { on, off };

// ---------------------------------------------------------------------------
// Rectifier

/// States: inductor current, capacitor voltage. The negative half-cycle model
/// only flips the sign of the input map.
inline StateSpaceModel rectifier_state_space(const RectifierParams& p, Polarity polarity) {
    p.validate();
    Eigen::MatrixXd a(2, 2);
    a << 0.0, -1.0 / p.l_r, 1.0 / p.c_r, 0.0;
    Eigen::MatrixXd b(2, 1);
    const double sign = polarity == Polarity::positive ? 1.0 : -1.0;
    b << sign / p.l_r, 0.0;
    Eigen::MatrixXd c(1, 2);
    c << 0.0, 1.0;
    return {a, b, c, Eigen::MatrixXd::Zero(1, 1)};
}

/// 1 / (1 + s^2 L_r C_r). The rectifier output follows the magnitude of the
/// input, so both half-cycle models collapse onto the positive-sign form.
inline RationalTransferFunction rectifier_tf(const RectifierParams& p) {
    p.validate();
    return {{1.0}, {1.0, 0.0, p.l_r * p.c_r}};
}

// ---------------------------------------------------------------------------
// Boost charger

inline StateSpaceModel boost_state_space(const BoostParams& p, Subinterval sub) {
    p.validate();
    Eigen::MatrixXd a(2, 2);
    if (sub == Subinterval::on)
        a << 0.0, 0.0, 0.0, -1.0 / (p.r_c * p.c_c);
    else
        a << 0.0, -1.0 / p.l_c, 1.0 / p.c_c, -1.0 / (p.r_c * p.c_c);
    Eigen::MatrixXd b(2, 1);
    b << 1.0 / p.l_c, 0.0;
    Eigen::MatrixXd c(1, 2);
    c << 0.0, 1.0;
    return {a, b, c, Eigen::MatrixXd::Zero(1, 1)};
}

/// Duty-weighted average of the two subinterval models.
inline StateSpaceModel boost_averaged_state_space(const BoostParams& p) {
    return average_models({{boost_state_space(p, Subinterval::on), p.duty},
                           {boost_state_space(p, Subinterval::off), 1.0 - p.duty}});
}

/// (1-d) / (s^2 L_c C_c + s L_c / R_c + (1-d)^2)
inline RationalTransferFunction boost_averaged_tf(const BoostParams& p) {
    p.validate();
    const double dp = 1.0 - p.duty;
    return {{dp}, {dp * dp, p.l_c / p.r_c, p.l_c * p.c_c}};
}

/// Rectifier and boost stage in cascade.
inline RationalTransferFunction charger_tf(const RectifierParams& r, const BoostParams& b) {
    return rectifier_tf(r) * boost_averaged_tf(b);
}

enum class ConductionMode { ccm, dcm };

struct CcmVerdict {
    ConductionMode mode;
    double inductor_current;  ///< steady-state average [A]
    double ripple_half;       ///< peak ripple above the average [A]
    double margin;            ///< inductor_current - ripple_half [A]
};

/// Continuous-conduction check from the ideal boost steady state:
/// I_L = V_out / ((1-d) R_c) with V_out = V_in / (1-d), and half peak-to-peak
/// ripple V_in d / (2 L_c f_sw).
inline CcmVerdict ccm_check(const BoostParams& p, double v_in) {
    p.validate();
    const double dp = 1.0 - p.duty;
    const double v_out = v_in / dp;
    const double i_l = v_out / (dp * p.r_c);
    const double ripple_half = v_in * p.duty / (2.0 * p.l_c * p.f_sw);
    const double margin = i_l - ripple_half;
    return {margin > 0.0 ? ConductionMode::ccm : ConductionMode::dcm, i_l, ripple_half, margin};
}

// ---------------------------------------------------------------------------
// Push-pull inverter

/// Average inductor voltage while the first leg conducts.
inline double inverter_inductor_voltage_on(const InverterParams& p, double v_i, double i_i, double v_o) {
    return p.n * v_i - p.n * i_i * p.r_on - v_o;
}

/// Average inductor voltage while the second leg conducts.
inline double inverter_inductor_voltage_off(const InverterParams& p, double v_i, double i_i, double v_o) {
    return -p.n * v_i + p.n * i_i * p.r_on - v_o;
}

/// Output voltage from inductor volt-second balance: V_o = n d (V_i - I_i R_on).
inline double inverter_avg_output(const InverterParams& p, double v_i, double i_i) {
    p.validate();
    if (!(v_i > 0.0)) throw ArgumentError("inverter input voltage must be positive");
    if (!(i_i >= 0.0)) throw ArgumentError("inverter input current must be non-negative");
    return p.n * p.duty * (v_i - i_i * p.r_on);
}

/// G_v = n d (1 - R_on / R_i).
inline double inverter_gain(const InverterParams& p) {
    p.validate();
    return p.n * p.duty * (1.0 - p.r_on / p.r_i);
}

struct InverterEfficiency {
    /// n^2 d^2 (V_i - I_i R_on)^2 / (R_o V_i I_i) x 100, i.e. P_o / (V_i I_i).
    double percent;
    /// Set when `percent` exceeds 100: the operating point is outside what the
    /// averaged model can represent (P_o is not constrained by R_i).
    bool out_of_model;
    /// P_o / (V_i R_i) x 100 with the input power written as V_i R_i. Kept only
    /// for comparison; it is not dimensionless.
    double literal_vi_ri_percent;
};

inline InverterEfficiency inverter_efficiency(const InverterParams& p, double v_i, double i_i) {
    p.validate();
    if (!(v_i > 0.0)) throw ArgumentError("inverter input voltage must be positive");
    if (!(i_i > 0.0)) throw ArgumentError("inverter input current must be positive");
    const double drop = v_i - i_i * p.r_on;
    const double p_o = p.n * p.n * p.duty * p.duty * drop * drop / p.r_o;
    const double pct = p_o / (v_i * i_i) * 100.0;
    return {pct, pct > 100.0, p_o / (v_i * p.r_i) * 100.0};
}

}  // namespace upsim
