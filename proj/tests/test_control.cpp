#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mrclc/control.hpp"
#include "mrclc/scenarios.hpp"

using namespace mrclc;

namespace {

const Scenario& pendulum() {
    static const Scenario sc = inverted_pendulum_scenario();
    return sc;
}

// Minimal first-order config: e'Pb reduces to e[0] so rate values are
// easy to write down.
ControllerConfig scalar_config(double gamma, double c_w) {
    ControllerConfig cfg;
    cfg.p = Matrix{{1.0}};
    cfg.q = Matrix{{1.0}};
    cfg.k_e = Vector{1.0};
    cfg.k_r = Vector{0.0, 1.0};
    cfg.gamma = gamma;
    cfg.c_w = c_w;
    return cfg;
}

}  // namespace

TEST_CASE("solve_feedforward_gain", "[control]") {
    SECTION("pendulum gains") {
        Vector k_r = solve_feedforward_gain(Matrix{{0.0, 1.0}, {0.0, 0.0}},
                                            Matrix{{0.0, 1.0}, {-1.0, -2.0}}, 1.0);
        REQUIRE(k_r.size() == 3);
        CHECK(k_r[0] == -1.0);
        CHECK(k_r[1] == -2.0);
        CHECK(k_r[2] == 1.0);
    }
    SECTION("identical models leave only the feedthrough") {
        Matrix lam{{0.0, 1.0}, {-1.0, -2.0}};
        Vector k_r = solve_feedforward_gain(lam, lam, 1.0);
        CHECK(k_r[0] == 0.0);
        CHECK(k_r[1] == 0.0);
        CHECK(k_r[2] == 1.0);
    }
    SECTION("incompatible upper rows are rejected") {
        CHECK_THROWS_AS(solve_feedforward_gain(Matrix{{0.0, 1.0}, {0.0, 0.0}},
                                               Matrix{{0.5, 1.0}, {-1.0, -2.0}}, 1.0),
                        Infeasible);
    }
}

TEST_CASE("control_input parts", "[control]") {
    const ControllerConfig& cfg = pendulum().controller;

    SECTION("zero error leaves only feedforward") {
        Vector x_re{0.3, -0.2, 1.0};
        ControlParts p = control_input(cfg, Vector{0.0, 0.0}, x_re, Vector{0.0, 0.0, 1.0},
                                       Vector{0.0, 0.0, 0.0});
        CHECK(p.u_pd == 0.0);
        CHECK(p.u_ad == 0.0);
        CHECK(p.u == Catch::Approx(dot(cfg.k_r, x_re)).margin(1e-15));
    }
    SECTION("exact cancellation term") {
        Vector phi{0.3, -1.0, 2.0};
        Vector w{1.0, -1.0, 0.5};
        ControlParts p = control_input(cfg, Vector{0.0, 0.0}, Vector{0.0, 0.0, 0.0}, phi, w);
        CHECK(p.u == Catch::Approx(-dot(w, phi)).margin(1e-15));
    }
    SECTION("initial pendulum input") {
        // e = 0, x_re = [1, 1, 0], What = 0 with k_r = [-1, -2, 1].
        ControlParts p = control_input(cfg, Vector{0.0, 0.0}, Vector{1.0, 1.0, 0.0},
                                       Vector{std::sin(1.0), 1.0, std::exp(1.0)},
                                       Vector{0.0, 0.0, 0.0});
        CHECK(p.u == Catch::Approx(-3.0).margin(1e-15));
    }
}

TEST_CASE("project", "[control]") {
    const double c_w = 2.0;
    SECTION("interior passthrough") {
        Vector v{3.0, -1.0, 0.5};
        Vector out = project(Vector{0.1, 0.1, 0.1}, v, c_w);
        CHECK(out == v);
    }
    SECTION("radial component removed on the boundary") {
        Vector out = project(Vector{c_w, 0.0, 0.0}, Vector{1.0, 0.0, 0.0}, c_w);
        CHECK(out[0] == 0.0);
        CHECK(out[1] == 0.0);
        CHECK(out[2] == 0.0);
    }
    SECTION("inward drives pass through on the boundary") {
        Vector v{-1.0, 2.0, 0.0};
        Vector out = project(Vector{c_w, 0.0, 0.0}, v, c_w);
        CHECK(out == v);
    }
}

TEST_CASE("project commutes with positive scaling", "[control]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    std::uniform_real_distribution<double> pos(0.01, 50.0);
    for (int trial = 0; trial < 200; ++trial) {
        Vector w(3), v(3);
        for (auto& c : w) c = uni(rng);
        for (auto& c : v) c = uni(rng);
        if (trial % 2 == 0) {  // half the trials on the boundary branch
            const double nw = norm(w);
            for (auto& c : w) c *= 1.5 / nw;
        }
        const double g = pos(rng);
        Vector gv(3);
        for (std::size_t i = 0; i < 3; ++i) gv[i] = g * v[i];
        Vector a = project(w, gv, 1.5);
        Vector b = project(w, v, 1.5);
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(a[i] == Catch::Approx(g * b[i]).margin(1e-12 * std::max(1.0, std::abs(g))));
    }
}

TEST_CASE("filter_step", "[control]") {
    SECTION("matched constant input is an equilibrium") {
        FilterState s{4.0, 0.0};
        for (int k = 0; k < 100; ++k) s = filter_step(s, 4.0, 100.0, 0.7, 0.001);
        CHECK(s.e_hat == Catch::Approx(4.0).margin(1e-12));
        CHECK(s.de_hat == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("initialization convention") {
        const double e0 = 5.0;
        FilterState s{e0, 0.0};
        CHECK(s.e_hat == 5.0);
        CHECK(s.de_hat == 0.0);
    }
    SECTION("unit-frequency sine tracked within 1% amplitude") {
        // At omega = 100, zeta = 0.7 the frequency ratio is 0.01, so the
        // derivative estimate of sin t should swing with amplitude 1
        // up to a sub-percent gain error.
        FilterState s{0.0, 0.0};
        const double h = 0.001;
        double amp = 0.0;
        for (int k = 0; k < 20000; ++k) {
            s = filter_step(s, std::sin(k * h), 100.0, 0.7, h);
            if (k * h > 20.0 - 6.5) amp = std::max(amp, std::abs(s.de_hat));
        }
        CHECK(amp == Catch::Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("window buffer integrals", "[control]") {
    const double h = 0.001;
    SECTION("constant regressor saturates at tau_d") {
        WindowBuffer buf(2, 5.0, h);
        Vector phi{1.0, 0.0}, zero2{0.0, 0.0};
        for (int k = 0; k <= 6000; ++k) buf.push(phi, zero2);
        CHECK(buf.theta()(0, 0) == Catch::Approx(5.0).margin(1e-9));
        CHECK(buf.theta()(0, 1) == 0.0);
        CHECK(buf.theta()(1, 1) == 0.0);
        CHECK(buf.g()[0] == 0.0);
    }
    SECTION("ramp regressor reproduces the analytic integral") {
        WindowBuffer buf(2, 5.0, h);
        Vector zero2{0.0, 0.0};
        for (int k = 0; k <= 1000; ++k) buf.push(Vector{k * h, 0.0}, zero2);
        CHECK(buf.theta()(0, 0) == Catch::Approx(1.0 / 3.0).margin(1e-6));
    }
    SECTION("zero regressor stays zero") {
        WindowBuffer buf(2, 1.0, h);
        Vector zero2{0.0, 0.0};
        for (int k = 0; k <= 1500; ++k) buf.push(zero2, zero2);
        CHECK(buf.theta().frobenius_norm() == 0.0);
        CHECK(min_eig_sym(buf.theta()) == 0.0);
        CHECK(norm(buf.g()) == 0.0);
    }
}

TEST_CASE("window ring sums match direct quadrature", "[control]") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    WindowBuffer buf(3, 1.0, 0.001);
    Vector phi{0.5, -0.2, 1.0};
    for (int k = 0; k <= 2500; ++k) {
        for (auto& c : phi) c += 0.05 * gauss(rng);
        Vector integ{phi[0] * 0.1, phi[1] * 0.1, phi[2] * 0.1};
        buf.push(phi, integ);
        if (k % 500 == 0) {
            Matrix theta_d;
            Vector g_d;
            buf.recompute(theta_d, g_d);
            for (std::size_t i = 0; i < 3; ++i) {
                for (std::size_t j = 0; j < 3; ++j)
                    CHECK(std::abs(buf.theta()(i, j) - theta_d(i, j)) < 1e-9);
                CHECK(std::abs(buf.g()[i] - g_d[i]) < 1e-9);
            }
            // The windowed Gram matrix stays symmetric PSD.
            CHECK(min_eig_sym(buf.theta()) > -1e-9);
        }
    }
}

TEST_CASE("excitation memory freezes the best snapshot", "[control]") {
    const double h = 0.001;
    WindowBuffer buf(2, 1.0, h);
    ExcitationMemory mem(2);
    Vector zero2{0.0, 0.0};

    // Rank-one content first: sigma stays zero, nothing is frozen.
    for (int k = 0; k < 300; ++k) buf.push(Vector{1.0, 0.0}, zero2);
    CHECK(excitation_update(mem, buf, 0.3) == 0.0);
    CHECK_FALSE(mem.t_e.has_value());
    CHECK(mem.sigma_best == 0.0);

    // Add the second direction: first positive evaluation freezes.
    for (int k = 0; k < 300; ++k) buf.push(Vector{0.0, 1.0}, zero2);
    const double s1 = excitation_update(mem, buf, 0.6);
    CHECK(s1 > 0.0);
    CHECK(mem.sigma_best == s1);
    REQUIRE(mem.t_e.has_value());
    CHECK(*mem.t_e == 0.6);
    CHECK(min_eig_sym(mem.theta_frozen) == Catch::Approx(mem.sigma_best).margin(1e-9));

    // Let the informative content slide out: sigma_r drops, the frozen
    // snapshot must survive.
    for (int k = 0; k < 1200; ++k) buf.push(zero2, zero2);
    const double s2 = excitation_update(mem, buf, 1.8);
    CHECK(s2 < s1);
    CHECK(mem.sigma_best == s1);
    CHECK(*mem.t_e == 0.6);
}

TEST_CASE("data stack admission", "[control]") {
    SECTION("first nonzero point is always taken") {
        DataStack st(2, 4);
        CHECK(record_point(st, Vector{1.0, 0.0}, 0.5));
        CHECK(st.size() == 1);
    }
    SECTION("rank completion raises the spectrum floor") {
        DataStack st(2, 4);
        record_point(st, Vector{1.0, 0.0}, 0.0);
        CHECK(st.min_eig() == Catch::Approx(0.0).margin(1e-12));
        CHECK(record_point(st, Vector{0.0, 1.0}, 0.0));
        CHECK(st.min_eig() == Catch::Approx(1.0).margin(1e-9));
    }
    SECTION("duplicates of a full-rank stack are rejected") {
        DataStack st(2, 4);
        record_point(st, Vector{1.0, 0.0}, 0.0);
        record_point(st, Vector{0.0, 1.0}, 0.0);
        CHECK_FALSE(record_point(st, Vector{1.0, 0.0}, 0.0));
        CHECK(st.size() == 2);
    }
    SECTION("full stack swaps only when the spectrum gains") {
        DataStack st(2, 2);
        record_point(st, Vector{1.0, 0.0}, 0.0);
        record_point(st, Vector{0.0, 1.0}, 0.0);
        // Swapping any entry for [1, 1] cannot raise min_eig(ZZ').
        CHECK_FALSE(record_point(st, Vector{1.0, 1.0}, 0.0));

        DataStack st3(2, 3);
        record_point(st3, Vector{2.0, 0.0}, 0.0);
        record_point(st3, Vector{0.0, 1.0}, 0.0);
        record_point(st3, Vector{0.1, 0.0}, 0.0);
        const double before = st3.min_eig();
        CHECK(before == Catch::Approx(1.0).margin(1e-6));
        // [0, 3] replaces the redundant [0.1, 0] and lifts the weak axis.
        CHECK(record_point(st3, Vector{0.0, 3.0}, 0.0));
        CHECK(st3.size() == 3);
        CHECK(st3.min_eig() == Catch::Approx(4.0).margin(1e-6));
    }
}

TEST_CASE("adaptation rates", "[control]") {
    SECTION("classical rate is the projected gradient") {
        ControllerConfig cfg = scalar_config(2.0, 10.0);
        Vector rate = mrac_rate(cfg, Vector{1.0}, Vector{1.0, 2.0, 3.0}, Vector{0.0, 0.0, 0.0});
        CHECK(rate[0] == 2.0);
        CHECK(rate[1] == 4.0);
        CHECK(rate[2] == 6.0);
        Vector zero_rate = mrac_rate(cfg, Vector{0.0}, Vector{1.0, 2.0, 3.0}, Vector{0.0, 0.0, 0.0});
        CHECK(norm(zero_rate) == 0.0);
    }
    SECTION("boundary estimate keeps only the tangential component") {
        ControllerConfig cfg = scalar_config(1.0, 2.0);
        Vector rate = mrac_rate(cfg, Vector{1.0}, Vector{1.0, 0.0, 0.0}, Vector{2.0, 0.0, 0.0});
        CHECK(rate[0] == 0.0);
        CHECK(rate[1] == 0.0);
        CHECK(rate[2] == 0.0);
    }
    SECTION("composite rate reduces to the classical one without a snapshot") {
        ControllerConfig cfg = scalar_config(3.5, 10.0);
        cfg.k_w = 6.0;
        ExcitationMemory mem(3);
        Vector e{0.7};
        Vector phi{1.0, -2.0, 0.5};
        Vector w{0.1, 0.2, 0.3};
        Vector a = composite_rate(cfg, e, phi, mem, w);
        Vector b = mrac_rate(cfg, e, phi, w);
        for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
    }
    SECTION("pure prediction-error drive at zero tracking error") {
        ControllerConfig cfg = scalar_config(2.0, 10.0);
        cfg.k_w = 3.0;
        ExcitationMemory mem(2);
        mem.theta_frozen = Matrix{{2.0, 0.5}, {0.5, 1.0}};
        mem.g_frozen = Vector{1.0, -1.0};
        mem.sigma_best = min_eig_sym(mem.theta_frozen);
        Vector w{0.2, 0.4};
        Vector rate = composite_rate(cfg, Vector{0.0}, Vector{0.0, 0.0}, mem, w);
        Vector eps = mem.theta_frozen * w;
        for (std::size_t i = 0; i < 2; ++i) eps[i] = mem.g_frozen[i] - eps[i];
        CHECK(rate[0] == Catch::Approx(2.0 * 3.0 * eps[0]).margin(1e-15));
        CHECK(rate[1] == Catch::Approx(2.0 * 3.0 * eps[1]).margin(1e-15));
    }
    SECTION("prediction error with an exact moment bounds the quadratic form") {
        // With G_e = Theta_e W*, eps = Theta_e Wtilde, so
        // Wtilde'eps >= sigma_best ||Wtilde||^2.
        Matrix theta = outer(Vector{1.0, 0.2, -0.3}, Vector{1.0, 0.2, -0.3}) +
                       outer(Vector{0.1, 1.0, 0.4}, Vector{0.1, 1.0, 0.4}) +
                       outer(Vector{-0.2, 0.3, 1.0}, Vector{-0.2, 0.3, 1.0});
        Vector w_star{1.0, -1.0, 0.5};
        Vector w{0.3, 0.1, -0.2};
        Vector wt(3);
        for (std::size_t i = 0; i < 3; ++i) wt[i] = w_star[i] - w[i];
        Vector g = theta * w_star;
        Vector eps = theta * w;
        for (std::size_t i = 0; i < 3; ++i) eps[i] = g[i] - eps[i];
        CHECK(dot(wt, eps) >= min_eig_sym(theta) * dot(wt, wt) - 1e-12);
    }
    SECTION("concurrent rate with an empty stack equals the classical rate") {
        ControllerConfig cfg = scalar_config(3.5, 10.0);
        DataStack st(3, 5);
        Vector e{0.4};
        Vector phi{0.5, 1.0, -1.0};
        Vector w{0.1, -0.1, 0.2};
        Vector a = concurrent_rate(cfg, e, phi, st, w);
        Vector b = mrac_rate(cfg, e, phi, w);
        for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
    }
    SECTION("an exactly consistent stored point contributes nothing") {
        ControllerConfig cfg = scalar_config(1.0, 10.0);
        DataStack st(2, 5);
        Vector w_true{1.0, -0.5};
        Vector phi_j{0.8, 0.3};
        record_point(st, phi_j, dot(w_true, phi_j));
        Vector a = concurrent_rate(cfg, Vector{0.6}, Vector{1.0, 1.0}, st, w_true);
        Vector b = mrac_rate(cfg, Vector{0.6}, Vector{1.0, 1.0}, w_true);
        for (std::size_t i = 0; i < 2; ++i) CHECK(a[i] == Catch::Approx(b[i]).margin(1e-15));
    }
    SECTION("stored-data sum matches direct evaluation") {
        ControllerConfig cfg = scalar_config(1.0, 100.0);
        DataStack st(2, 5);
        record_point(st, Vector{1.0, 0.0}, 0.5);
        record_point(st, Vector{0.0, 2.0}, -1.0);
        Vector w{0.1, 0.2};
        // eps_1 = 0.5 - 0.1 = 0.4; eps_2 = -1 - 0.4 = -1.4.
        Vector rate = concurrent_rate(cfg, Vector{1.0}, Vector{1.0, 1.0}, st, w);
        CHECK(rate[0] == Catch::Approx(1.0 + 0.4).margin(1e-15));
        CHECK(rate[1] == Catch::Approx(1.0 - 2.8).margin(1e-15));
    }
}

TEST_CASE("projection ball holds under random drives", "[control]") {
    // Integrate What' = proj(What, v) through the same stepper the
    // closed loop uses, with the post-step pullback, under aggressive
    // random drives; the estimate may never leave the ball by more than
    // the documented slack.
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> gauss(0.0, 30.0);
    std::uniform_real_distribution<double> rad(0.0, 1.0);
    const double c_w = 2.0;
    const double h = 0.001;
    double worst = 0.0;
    for (int seq = 0; seq < 100; ++seq) {
        Vector w(3);
        for (auto& c : w) c = gauss(rng);
        const double target = c_w * rad(rng);
        const double nw0 = norm(w);
        if (nw0 > 0) for (auto& c : w) c *= target / nw0;
        for (int k = 0; k < 200; ++k) {
            Vector v(3);
            for (auto& c : v) c = gauss(rng);
            w = rk4_step([&](double, const Vector& s) { return project(s, v, c_w); }, 0.0, w, h);
            const double nw = norm(w);
            if (nw > c_w) for (auto& c : w) c *= c_w / nw;
            worst = std::max(worst, norm(w));
        }
    }
    CHECK(worst <= c_w + 1e-6);
}

TEST_CASE("build_controller_config validates and solves", "[control]") {
    const Scenario& sc = pendulum();
    const ControllerConfig& cfg = sc.controller;
    Matrix a = error_matrix(sc.plant.lam, cfg.k_e);
    Matrix resid = a.transpose() * cfg.p + cfg.p * a + cfg.q;
    CHECK(resid.frobenius_norm() <= 1e-10 * std::max(1.0, cfg.q.frobenius_norm()));
    CHECK(min_eig_sym(cfg.p) > 0.0);
    CHECK(cfg.k_r.size() == 3);

    CHECK_THROWS_AS(build_controller_config(sc.plant.lam, sc.reference.a_r, 1.0,
                                            Vector{-2.0, -2.0}, Matrix::identity(2), 1.0, 0.0,
                                            5.0, 5.0, 100.0, 0.7),
                    NotHurwitz);
}
