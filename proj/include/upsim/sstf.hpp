#pragma once

// Linear state-space models and their rational Laplace-domain transfer
// functions. Polynomials are stored with ascending powers of s.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "upsim/errors.hpp"

namespace upsim {

using Complex = std::complex<double>;
using Polynomial = std::vector<double>;

namespace poly {

/// Drops trailing (highest-order) zero coefficients, keeping at least one entry.
inline Polynomial trim(Polynomial p) {
    while (p.size() > 1 && p.back() == 0.0) p.pop_back();
    if (p.empty()) p.push_back(0.0);
    return p;
}

inline int degree(const Polynomial& p) {
    auto t = trim(p);
    return t.size() == 1 && t[0] == 0.0 ? -1 : static_cast<int>(t.size()) - 1;
}

template <typename T>
T evaluate(std::span<const double> p, T s) {
    T acc{0.0};
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * s + T{*it};
    return acc;
}

/// Sum of |c_k| |s|^k, the natural scale for judging whether p(s) is numerically zero.
inline double magnitude_bound(std::span<const double> p, double abs_s) {
    double acc = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * abs_s + std::abs(*it);
    return acc;
}

inline Polynomial multiply(const Polynomial& a, const Polynomial& b) {
    Polynomial out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

inline Polynomial scale(Polynomial p, double k) {
    for (auto& c : p) c *= k;
    return p;
}

}  // namespace poly

/// Constant-matrix linear system  x' = A x + B u,  y = C x + D u.
class StateSpaceModel {
public:
    StateSpaceModel(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c, Eigen::MatrixXd d)
        : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
        validate();
    }

    const Eigen::MatrixXd& a() const noexcept { return a_; }
    const Eigen::MatrixXd& b() const noexcept { return b_; }
    const Eigen::MatrixXd& c() const noexcept { return c_; }
    const Eigen::MatrixXd& d() const noexcept { return d_; }

    Eigen::Index states() const noexcept { return a_.rows(); }
    Eigen::Index inputs() const noexcept { return b_.cols(); }
    Eigen::Index outputs() const noexcept { return c_.rows(); }

private:
    void validate() const {
        const auto n = a_.rows();
        if (n < 1 || a_.cols() != n)
            throw InvalidModelError("state matrix must be square with at least one state");
        if (b_.rows() != n || b_.cols() < 1)
            throw InvalidModelError("input matrix must have " + std::to_string(n) + " rows and at least one column");
        if (c_.cols() != n || c_.rows() < 1)
            throw InvalidModelError("output matrix must have " + std::to_string(n) + " columns and at least one row");
        if (d_.rows() != c_.rows() || d_.cols() != b_.cols())
            throw InvalidModelError("feedthrough matrix must be outputs x inputs");
    }

    Eigen::MatrixXd a_, b_, c_, d_;
};

/// num(s) / den(s) with real coefficients in ascending powers of s.
class RationalTransferFunction {
public:
    RationalTransferFunction(Polynomial num, Polynomial den)
        : num_(poly::trim(std::move(num))), den_(poly::trim(std::move(den))) {
        if (den_.size() == 1 && den_[0] == 0.0)
            throw InvalidModelError("transfer function denominator is identically zero");
    }

    static RationalTransferFunction constant(double k) { return {{k}, {1.0}}; }

    const Polynomial& num() const noexcept { return num_; }
    const Polynomial& den() const noexcept { return den_; }

    /// Same function with the highest-order denominator coefficient scaled to 1.
    RationalTransferFunction monic() const {
        const double lead = den_.back();
        return {poly::scale(num_, 1.0 / lead), poly::scale(den_, 1.0 / lead)};
    }

    RationalTransferFunction operator*(const RationalTransferFunction& rhs) const {
        return {poly::multiply(num_, rhs.num_), poly::multiply(den_, rhs.den_)};
    }

private:
    Polynomial num_;
    Polynomial den_;
};

/// Exact C (sI - A)^-1 B + D for one input/output channel.
///
/// Uses the Faddeev-LeVerrier recursion, which yields the characteristic
/// polynomial det(sI - A) together with the matrix coefficients of the
/// adjugate adj(sI - A) = sum_k M_k s^(n-k). The result is monic in the
/// denominator; no pole/zero cancellation is attempted.
inline RationalTransferFunction tf_from_state_space(const StateSpaceModel& ss, Eigen::Index input_index,
                                                    Eigen::Index output_index) {
    if (input_index < 0 || input_index >= ss.inputs())
        throw ArgumentError("input index " + std::to_string(input_index) + " out of range");
    if (output_index < 0 || output_index >= ss.outputs())
        throw ArgumentError("output index " + std::to_string(output_index) + " out of range");

    const auto n = ss.states();
    const Eigen::MatrixXd& a = ss.a();
    const Eigen::VectorXd b = ss.b().col(input_index);
    const Eigen::RowVectorXd c = ss.c().row(output_index);
    const double d = ss.d()(output_index, input_index);

    // charpoly[k] is the coefficient of s^k; charpoly[n] = 1.
    Polynomial charpoly(static_cast<std::size_t>(n) + 1, 0.0);
    charpoly[n] = 1.0;
    Polynomial adj_num(static_cast<std::size_t>(n), 0.0);

    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 1; k <= n; ++k) {
        m = a * m + charpoly[n - k + 1] * eye;
        adj_num[n - k] = c * m * b;
        charpoly[n - k] = -(a * m).trace() / static_cast<double>(k);
    }

    Polynomial num(static_cast<std::size_t>(n) + 1, 0.0);
    for (Eigen::Index k = 0; k < n; ++k) num[k] = adj_num[k];
    for (Eigen::Index k = 0; k <= n; ++k) num[k] += d * charpoly[k];
    return {num, charpoly};
}

/// num(s)/den(s) by Horner evaluation.
inline Complex evaluate_tf(const RationalTransferFunction& tf, Complex s) {
    const Complex den = poly::evaluate<Complex>(tf.den(), s);
    const double scale = poly::magnitude_bound(tf.den(), std::abs(s));
    if (std::abs(den) <= 1e-14 * scale)
        throw PoleEvaluationError("transfer function evaluated at a pole");
    return poly::evaluate<Complex>(tf.num(), s) / den;
}

inline double dc_gain(const RationalTransferFunction& tf) {
    if (tf.den().front() == 0.0) throw PoleEvaluationError("transfer function has a pole at the origin");
    return evaluate_tf(tf, Complex{0.0, 0.0}).real();
}

struct FrequencyPoint {
    double magnitude;
    double phase_rad;
};

inline std::vector<FrequencyPoint> frequency_response(const RationalTransferFunction& tf,
                                                      std::span<const double> freqs_hz) {
    std::vector<FrequencyPoint> out;
    out.reserve(freqs_hz.size());
    for (double f : freqs_hz) {
        Complex h;
        try {
            h = evaluate_tf(tf, Complex{0.0, 2.0 * std::numbers::pi * f});
        } catch (const PoleEvaluationError&) {
            throw PoleEvaluationError("transfer function has an imaginary-axis pole at " + std::to_string(f) +
                                      " Hz");
        }
        out.push_back({std::abs(h), std::arg(h)});
    }
    return out;
}

struct WeightedModel {
    StateSpaceModel model;
    double weight;
};

/// Weighted sum of dimension-identical models (duty-ratio averaging).
inline StateSpaceModel average_models(std::span<const WeightedModel> entries) {
    if (entries.empty()) throw ArgumentError("average_models needs at least one model");
    const auto& first = entries.front().model;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(first.a().rows(), first.a().cols());
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(first.b().rows(), first.b().cols());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(first.c().rows(), first.c().cols());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(first.d().rows(), first.d().cols());
    for (const auto& [m, w] : entries) {
        if (m.states() != first.states() || m.inputs() != first.inputs() || m.outputs() != first.outputs())
            throw InvalidModelError("cannot average models of different dimensions");
        if (!(w >= 0.0)) throw ArgumentError("averaging weights must be non-negative");
        a += w * m.a();
        b += w * m.b();
        c += w * m.c();
        d += w * m.d();
    }
    return {a, b, c, d};
}

inline StateSpaceModel average_models(std::initializer_list<WeightedModel> entries) {
    return average_models(std::span<const WeightedModel>(entries.begin(), entries.size()));
}

}  // namespace upsim
