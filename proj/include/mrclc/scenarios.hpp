#pragma once

// Built-in scenario registry.  Bases and scenarios are registered in
// code by name; configuration files select them and may override
// numeric fields, but cannot define new dynamics.

#include "simulation.hpp"

namespace mrclc {

struct UnknownScenario : std::invalid_argument {
    explicit UnknownScenario(const std::string& what) : std::invalid_argument(what) {}
};

// Inverted pendulum on a cart, second order, with the nonlinear basis
// Phi(x) = [sin x1, |x2| x2, exp(x1 x2)] and ground truth
// W* = [1, -1, 0.5]'.  Reference model xr' = [[0,1],[-1,-2]] xr + [0,1]' r
// with r(t) = 1 on [20, 25) and 0 elsewhere.
inline Scenario inverted_pendulum_scenario() {
    Scenario sc;
    sc.name = "inverted_pendulum";

    RegressionBasis basis;
    basis.name = "pendulum3";
    basis.dimension = 3;
    basis.evaluator = [](const Vector& x) {
        return Vector{std::sin(x[0]), std::abs(x[1]) * x[1], std::exp(x[0] * x[1])};
    };

    sc.plant.n = 2;
    sc.plant.lam = Matrix{{0.0, 1.0}, {0.0, 0.0}};
    sc.plant.w_true = Vector{1.0, -1.0, 0.5};
    sc.plant.basis = basis;

    ReferenceSignal sig;
    sig.segments.push_back(ReferenceSignal::Segment{20.0, 25.0, 1.0});
    sig.default_value = 0.0;
    sc.reference = make_reference_model(Matrix{{0.0, 1.0}, {-1.0, -2.0}}, 1.0, sig);

    sc.controller = build_controller_config(
        sc.plant.lam, sc.reference.a_r, sc.reference.b_r,
        /*k_e=*/Vector{1.5, 1.3}, /*q=*/Matrix{{10.0, 0.0}, {0.0, 10.0}},
        /*gamma=*/3.5, /*k_w=*/6.0, /*c_w=*/5.0, /*tau_d=*/5.0, /*omega=*/100.0, /*zeta=*/0.7);

    sc.x0 = Vector{1.0, 1.0};
    sc.xr0 = Vector{1.0, 1.0};
    sc.w0 = Vector{0.0, 0.0, 0.0};
    sc.duration = 40.0;
    sc.h = 0.001;
    sc.law = Law::CompositeLearning;
    return sc;
}

inline std::vector<std::string> scenario_names() { return {"inverted_pendulum"}; }

inline Scenario make_scenario(const std::string& name) {
    if (name == "inverted_pendulum") return inverted_pendulum_scenario();
    std::string known;
    for (const std::string& s : scenario_names()) known += (known.empty() ? "" : ", ") + s;
    throw UnknownScenario("unknown scenario '" + name + "' (known: " + known + ")");
}

}  // namespace mrclc
