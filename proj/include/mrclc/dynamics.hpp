#pragma once

// Plant and reference-model dynamics, regression-basis evaluation,
// piecewise-constant reference signals, and a classical fixed-step RK4
// integrator for the combined closed-loop state.

#include <functional>
#include <string>
#include <utility>

#include "linalg.hpp"

namespace mrclc {

// Named nonlinear regression vector Phi(x).  Bases are registered in
// code by name; configuration selects a registered basis and cannot
// define arbitrary expressions (no expression interpreter).
struct RegressionBasis {
    std::string name;
    std::size_t dimension = 0;
    std::function<Vector(const Vector&)> evaluator;
};

inline Vector eval_basis(const RegressionBasis& basis, const Vector& x) {
    Vector phi = basis.evaluator(x);
    if (phi.size() != basis.dimension)
        throw DimensionMismatch("eval_basis: evaluator returned wrong dimension");
    for (double v : phi)
        if (!std::isfinite(v))
            throw NonFiniteOutput("eval_basis: non-finite component in basis '" + basis.name +
                                  "'");
    return phi;
}

// Companion-form affine plant: xdot = Lam x + b (W_true' Phi(x) + u)
// with b implicitly [0,...,0,1]'.  W_true is the simulator's ground
// truth; controllers never read it.
struct PlantModel {
    std::size_t n = 0;
    Matrix lam;     // n x n, superdiagonal ones, last row free
    Vector w_true;  // length N
    RegressionBasis basis;
};

inline Vector plant_derivative(const PlantModel& plant, const Vector& x, double u) {
    if (x.size() != plant.n) throw DimensionMismatch("plant_derivative: state length");
    Vector dx = plant.lam * x;
    dx[plant.n - 1] += dot(plant.w_true, eval_basis(plant.basis, x)) + u;
    return dx;
}

// Piecewise-constant reference signal: ordered list of half-open
// [start, end) segments with constant values, default elsewhere.
struct ReferenceSignal {
    struct Segment {
        double start = 0.0;
        double end = 0.0;
        double value = 0.0;
    };
    std::vector<Segment> segments;
    double default_value = 0.0;
};

inline double signal_value(const ReferenceSignal& sig, double t) {
    for (const auto& seg : sig.segments)
        if (t >= seg.start && t < seg.end) return seg.value;
    return sig.default_value;
}

// Linear reference model xr_dot = A_r xr + b_r r(t) b.
struct ReferenceModel {
    Matrix a_r;  // n x n, strictly Hurwitz (checked by make_reference_model)
    double b_r = 0.0;
    ReferenceSignal signal;
};

inline ReferenceModel make_reference_model(Matrix a_r, double b_r, ReferenceSignal signal) {
    if (!is_hurwitz(a_r)) throw NotHurwitz("reference model: A_r is not strictly Hurwitz");
    return ReferenceModel{std::move(a_r), b_r, std::move(signal)};
}

inline Vector reference_derivative(const ReferenceModel& ref, const Vector& xr, double t) {
    Vector dxr = ref.a_r * xr;
    dxr[dxr.size() - 1] += ref.b_r * signal_value(ref.signal, t);
    return dxr;
}

// One classical 4th-order Runge-Kutta step of dy/dt = deriv(t, y).
template <typename Deriv>
Vector rk4_step(Deriv&& deriv, double t, const Vector& state, double h) {
    const std::size_t m = state.size();
    Vector k1 = deriv(t, state);
    Vector y2(m), y3(m), y4(m);
    for (std::size_t i = 0; i < m; ++i) y2[i] = state[i] + 0.5 * h * k1[i];
    Vector k2 = deriv(t + 0.5 * h, y2);
    for (std::size_t i = 0; i < m; ++i) y3[i] = state[i] + 0.5 * h * k2[i];
    Vector k3 = deriv(t + 0.5 * h, y3);
    for (std::size_t i = 0; i < m; ++i) y4[i] = state[i] + h * k3[i];
    Vector k4 = deriv(t + h, y4);
    Vector out(m);
    for (std::size_t i = 0; i < m; ++i) {
        out[i] = state[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!std::isfinite(out[i])) throw NonFiniteOutput("rk4_step: non-finite state");
    }
    return out;
}

}  // namespace mrclc
