#pragma once

// Scenario assembly, the closed-loop run loop, data recording, summary
// metrics, and the stability-theorem monitor.

#include <algorithm>
#include <limits>
#include <random>

#include "control.hpp"
#include "dynamics.hpp"
#include "linalg.hpp"

namespace mrclc {

struct Scenario {
    std::string name;
    PlantModel plant;
    ReferenceModel reference;
    ControllerConfig controller;
    Vector x0;
    Vector xr0;
    Vector w0;  // initial parameter estimate
    double duration = 0.0;
    double h = 0.001;
    Law law = Law::CompositeLearning;
    double noise_amplitude = 0.0;  // additive Gaussian measurement noise on x
    unsigned long long noise_seed = 0;
    double output_period = 0.01;  // record decimation
    double tail_start = 30.0;     // tail window for summary RMSE

    // Diagnostic switches.  use_true_error_derivative replaces the
    // filter output with the ground-truth error derivative inside the
    // learning signals (window integrand and stack recording); the
    // theorem monitor's guarantees are stated under this exactness
    // hypothesis.  record_stack_data=false disables concurrent-learning
    // recording (the law then degenerates to the classical one).
    bool use_true_error_derivative = false;
    bool record_stack_data = true;
};

struct RunSummary {
    Vector tail_rmse;        // per state component over [tail_start, end]
    Vector final_param_err;  // |What_i(end) - W*_i|
    double final_wtilde_norm = 0.0;
    std::optional<double> t_e;
    double max_abs_u = 0.0;
    double tail_start = 0.0;
};

struct RunRecord {
    std::string scenario_name;
    Law law = Law::MRAC;
    std::size_t n = 0;          // state dimension
    std::size_t basis_dim = 0;  // N

    std::vector<double> t;
    std::vector<Vector> x;
    std::vector<Vector> xr;
    std::vector<Vector> e;
    std::vector<double> u, u_pd, u_re, u_ad;
    std::vector<Vector> w_hat;
    std::vector<double> wtilde_norm;
    std::vector<double> sigma_r;
    std::vector<double> sigma_best;
    std::vector<double> v;  // Lyapunov function, ground-truth W*
    std::vector<double> e_hat, de_hat;  // command-filter states (not in the CSV)

    std::optional<double> t_e;
    double sigma_best_final = 0.0;
    bool diverged = false;
    double max_window_drift = 0.0;  // worst ring-vs-direct gap at drift-guard checkpoints
    double max_moment_err = 0.0;    // worst ||G - Theta W*|| / max(1, ||Theta W*||) seen
    double stack_min_eig_final = 0.0;  // min_eig(ZZ') at the end (concurrent law)
    std::size_t stack_size_final = 0;
    Vector w_true;  // simulator ground truth (monitor/metrics use only)

    // Ingredients the theorem monitor needs.
    double lam_min_q = 0.0;
    double lam_max_p = 0.0;
    double gamma = 0.0;
    double k_w = 0.0;

    RunSummary summary;
};

struct TheoremMonitor {
    double slack_factor = 1e-7;    // monotonicity slack = factor * max(1, V(0))
    double envelope_factor = 1.05;  // headroom on the exponential envelope
};

struct TheoremReport {
    bool monotone_ok = false;
    double worst_dv = 0.0;
    double worst_dv_time = 0.0;
    double slack = 0.0;

    bool envelope_checked = false;  // only meaningful for the composite law with a detected T_e
    bool envelope_ok = true;
    double worst_env_margin = 0.0;  // max over t >= T_e of V(t) - bound(t)
    double worst_env_time = 0.0;
    double k_s = 0.0;

    bool passed() const { return monotone_ok && (!envelope_checked || envelope_ok); }
};

// Checks the monitored Lyapunov function against the theorem's two
// consequences: (a) V non-increasing across consecutive samples within
// slack, for every law; (b) for the composite law past T_e, V stays
// under envelope_factor * V(T_e) * exp(-k_s (t - T_e)) with
// k_s = min{lam_min(Q)/lam_max(P), 2 gamma k_w sigma_best}.
inline TheoremReport theorem_check(const RunRecord& rec, const TheoremMonitor& monitor = {}) {
    TheoremReport rep;
    if (rec.v.empty()) return rep;
    rep.slack = monitor.slack_factor * std::max(1.0, rec.v.front());
    rep.worst_dv = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rec.v.size(); ++i) {
        const double dv = rec.v[i] - rec.v[i - 1];
        if (dv > rep.worst_dv) {
            rep.worst_dv = dv;
            rep.worst_dv_time = rec.t[i];
        }
    }
    rep.monotone_ok = rep.worst_dv <= rep.slack;

    if (rec.law == Law::CompositeLearning && rec.t_e.has_value()) {
        rep.envelope_checked = true;
        rep.k_s = std::min(rec.lam_min_q / rec.lam_max_p,
                           2.0 * rec.gamma * rec.k_w * rec.sigma_best_final);
        const double te = *rec.t_e;
        std::size_t i0 = 0;
        for (std::size_t i = 0; i < rec.t.size(); ++i)
            if (std::abs(rec.t[i] - te) < std::abs(rec.t[i0] - te)) i0 = i;
        const double v_te = rec.v[i0];
        rep.worst_env_margin = -std::numeric_limits<double>::infinity();
        for (std::size_t i = i0; i < rec.t.size(); ++i) {
            const double bound =
                monitor.envelope_factor * v_te * std::exp(-rep.k_s * (rec.t[i] - rec.t[i0]));
            const double margin = rec.v[i] - bound;
            if (margin > rep.worst_env_margin) {
                rep.worst_env_margin = margin;
                rep.worst_env_time = rec.t[i];
            }
        }
        rep.envelope_ok = rep.worst_env_margin <= 0.0;
    }
    return rep;
}

inline RunSummary metrics(const RunRecord& rec, double tail_start) {
    if (rec.t.empty()) throw std::invalid_argument("metrics: empty record");
    if (tail_start >= rec.t.back())
        throw std::invalid_argument("metrics: tail_start must precede the end of the record");
    RunSummary s;
    s.tail_start = tail_start;
    s.tail_rmse.assign(rec.n, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < rec.t.size(); ++i) {
        if (rec.t[i] < tail_start) continue;
        ++count;
        for (std::size_t j = 0; j < rec.n; ++j) s.tail_rmse[j] += rec.e[i][j] * rec.e[i][j];
    }
    for (std::size_t j = 0; j < rec.n; ++j) s.tail_rmse[j] = std::sqrt(s.tail_rmse[j] / count);
    s.max_abs_u = 0.0;
    for (double ui : rec.u) s.max_abs_u = std::max(s.max_abs_u, std::abs(ui));
    s.t_e = rec.t_e;
    s.final_wtilde_norm = rec.wtilde_norm.back();
    s.final_param_err.assign(rec.basis_dim, 0.0);
    const Vector& w_end = rec.w_hat.back();
    for (std::size_t i = 0; i < rec.basis_dim; ++i)
        s.final_param_err[i] = std::abs(w_end[i] - rec.w_true[i]);
    return s;
}

// Integrates the closed loop (plant + reference model + command filter
// + parameter estimate) with fixed-step RK4 and records decimated
// series.  Deterministic: identical inputs produce identical records
// when the noise amplitude is zero.  On divergence (||x|| > 1e6) the
// partial record is returned with the diverged flag set.
inline RunRecord run(const Scenario& sc) {
    const std::size_t n = sc.plant.n;
    const std::size_t nb = sc.plant.basis.dimension;
    const ControllerConfig& cfg = sc.controller;

    if (sc.x0.size() != n || sc.xr0.size() != n)
        throw std::invalid_argument("run: initial state length != n");
    if (sc.w0.size() != nb) throw std::invalid_argument("run: initial estimate length != N");
    if (!(sc.h > 0.0)) throw std::invalid_argument("run: step size must be positive");
    if (sc.duration < cfg.tau_d)
        throw std::invalid_argument("run: duration must be at least tau_d");
    if (norm(sc.w0) > cfg.c_w)
        throw std::invalid_argument("run: ||W0|| exceeds the projection radius c_w");

    const Matrix a = error_matrix(sc.plant.lam, cfg.k_e);
    {
        Matrix resid = a.transpose() * cfg.p + cfg.p * a + cfg.q;
        if (resid.frobenius_norm() > 1e-10 * std::max(1.0, cfg.q.frobenius_norm()))
            throw std::invalid_argument("run: controller P does not solve the Lyapunov equation");
    }
    Vector a_last(n), lam_last(n), ar_last(n);
    for (std::size_t j = 0; j < n; ++j) {
        a_last[j] = a(n - 1, j);
        lam_last[j] = sc.plant.lam(n - 1, j);
        ar_last[j] = sc.reference.a_r(n - 1, j);
    }

    const long long steps = std::llround(sc.duration / sc.h);
    const long long out_every = std::max(1LL, std::llround(sc.output_period / sc.h));
    const long long sigma_every = std::max(1LL, std::llround(cfg.sigma_eval_period / sc.h));
    const long long recompute_every = std::max(1LL, std::llround(cfg.recompute_period / sc.h));

    WindowBuffer window(nb, cfg.tau_d, sc.h);
    ExcitationMemory memory(nb);
    DataStack stack(nb, cfg.stack_capacity);

    RunRecord rec;
    rec.scenario_name = sc.name;
    rec.law = sc.law;
    rec.n = n;
    rec.basis_dim = nb;
    rec.gamma = cfg.gamma;
    rec.k_w = cfg.k_w;
    rec.w_true = sc.plant.w_true;
    rec.lam_min_q = min_eig_sym(cfg.q);
    {
        Matrix neg_p = -1.0 * cfg.p;
        rec.lam_max_p = -min_eig_sym(neg_p);
    }

    // Combined RK4 state: [x (n), xr (n), filter (2), What (N)].
    Vector y(2 * n + 2 + nb, 0.0);
    std::copy(sc.x0.begin(), sc.x0.end(), y.begin());
    std::copy(sc.xr0.begin(), sc.xr0.end(), y.begin() + n);
    y[2 * n] = sc.x0[n - 1] - sc.xr0[n - 1];  // e_hat(0) = e_n(0)
    y[2 * n + 1] = 0.0;
    std::copy(sc.w0.begin(), sc.w0.end(), y.begin() + 2 * n + 2);

    std::mt19937_64 rng(sc.noise_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector noise(n, 0.0);

    const auto deriv = [&](double t, const Vector& s) {
        Vector dx_all(s.size());
        Vector x_(n), xr_(n), w_(nb);
        for (std::size_t i = 0; i < n; ++i) {
            x_[i] = s[i] + noise[i];
            xr_[i] = s[n + i];
        }
        for (std::size_t i = 0; i < nb; ++i) w_[i] = s[2 * n + 2 + i];
        const FilterState fe_{s[2 * n], s[2 * n + 1]};

        Vector e_(n);
        for (std::size_t i = 0; i < n; ++i) e_[i] = x_[i] - xr_[i];
        const Vector phi_ = eval_basis(sc.plant.basis, x_);
        const double r_ = signal_value(sc.reference.signal, t);
        Vector x_re(n + 1);
        std::copy(xr_.begin(), xr_.end(), x_re.begin());
        x_re[n] = r_;
        const ControlParts parts = control_input(cfg, e_, x_re, phi_, w_);

        Vector true_x(n);
        for (std::size_t i = 0; i < n; ++i) true_x[i] = s[i];
        const Vector dx = plant_derivative(sc.plant, true_x, parts.u);
        const Vector dxr = reference_derivative(sc.reference, xr_, t);
        const FilterState dfe = filter_derivative(fe_, e_[n - 1], cfg.omega, cfg.zeta);

        Vector dw;
        switch (sc.law) {
            case Law::MRAC:
                dw = mrac_rate(cfg, e_, phi_, w_);
                break;
            case Law::CompositeLearning:
                dw = composite_rate(cfg, e_, phi_, memory, w_);
                break;
            case Law::ConcurrentLearning:
                dw = concurrent_rate(cfg, e_, phi_, stack, w_);
                break;
        }

        for (std::size_t i = 0; i < n; ++i) {
            dx_all[i] = dx[i];
            dx_all[n + i] = dxr[i];
        }
        dx_all[2 * n] = dfe.e_hat;
        dx_all[2 * n + 1] = dfe.de_hat;
        for (std::size_t i = 0; i < nb; ++i) dx_all[2 * n + 2 + i] = dw[i];
        return dx_all;
    };

    double sigma_cur = 0.0;
    for (long long k = 0;; ++k) {
        const double t = double(k) * sc.h;
        if (sc.noise_amplitude > 0.0)
            for (std::size_t i = 0; i < n; ++i) noise[i] = sc.noise_amplitude * gauss(rng);

        Vector x(n), xr(n), w(nb);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = y[i];
            xr[i] = y[n + i];
        }
        for (std::size_t i = 0; i < nb; ++i) w[i] = y[2 * n + 2 + i];
        const FilterState fe{y[2 * n], y[2 * n + 1]};

        Vector x_meas(n), e(n), e_true(n);
        for (std::size_t i = 0; i < n; ++i) {
            x_meas[i] = x[i] + noise[i];
            e[i] = x_meas[i] - xr[i];
            e_true[i] = x[i] - xr[i];
        }
        const Vector phi = eval_basis(sc.plant.basis, x_meas);
        const double r = signal_value(sc.reference.signal, t);
        Vector x_re(n + 1);
        std::copy(xr.begin(), xr.end(), x_re.begin());
        x_re[n] = r;
        const ControlParts parts = control_input(cfg, e, x_re, phi, w);

        // Ground-truth error derivative from the closed-form error
        // dynamics; the learning signals use it only in the diagnostic
        // exact-derivative mode.
        Vector wt(nb);
        for (std::size_t i = 0; i < nb; ++i) wt[i] = sc.plant.w_true[i] - w[i];
        const double de_true = dot(a_last, e_true) + dot(wt, phi);
        const double de_used = sc.use_true_error_derivative ? de_true : fe.de_hat;

        if (sc.law == Law::CompositeLearning) {
            Vector integrand(nb);
            const double scale = de_used + dot(w, phi) - dot(a_last, e);
            for (std::size_t i = 0; i < nb; ++i) integrand[i] = phi[i] * scale;
            window.push(phi, integrand);
            if (k % recompute_every == 0)
                rec.max_window_drift = std::max(rec.max_window_drift, window.recompute_and_swap());
            if (k % sigma_every == 0) {
                sigma_cur = excitation_update(memory, window, t);
                // Quadrature identity diagnostic: how far the moving
                // moment G is from Theta W* (exact in the
                // true-derivative mode, filter-residual-limited else).
                Vector tw = window.theta() * sc.plant.w_true;
                Vector diff(nb);
                for (std::size_t i = 0; i < nb; ++i) diff[i] = window.g()[i] - tw[i];
                rec.max_moment_err =
                    std::max(rec.max_moment_err, norm(diff) / std::max(1.0, norm(tw)));
            }
        }
        if (sc.law == Law::ConcurrentLearning && sc.record_stack_data && k % sigma_every == 0 &&
            t + 1e-12 >= cfg.stack_warmup) {
            const double dxr_n = dot(ar_last, xr) + sc.reference.b_r * r;
            const double f_hat = de_used + dxr_n - dot(lam_last, x_meas) - parts.u;
            record_point(stack, phi, f_hat);
        }

        if (k % out_every == 0 || k == steps) {
            rec.t.push_back(t);
            rec.x.push_back(x);
            rec.xr.push_back(xr);
            rec.e.push_back(e_true);
            rec.u.push_back(parts.u);
            rec.u_pd.push_back(parts.u_pd);
            rec.u_re.push_back(parts.u_re);
            rec.u_ad.push_back(parts.u_ad);
            rec.w_hat.push_back(w);
            rec.wtilde_norm.push_back(norm(wt));
            rec.sigma_r.push_back(sigma_cur);
            rec.sigma_best.push_back(memory.sigma_best);
            rec.e_hat.push_back(fe.e_hat);
            rec.de_hat.push_back(fe.de_hat);
            Vector pe = cfg.p * e_true;
            rec.v.push_back(0.5 * dot(e_true, pe) + dot(wt, wt) / (2.0 * cfg.gamma));
        }
        if (k == steps) break;

        y = rk4_step(deriv, t, y, sc.h);

        // Discrete-time guard for the projection ball: one RK4 step of
        // the discontinuous projected field can overshoot the boundary
        // by O(h); pull the estimate back onto the ball.  The rescale is
        // non-expansive, so it never increases the Lyapunov function.
        double nw = 0.0;
        for (std::size_t i = 0; i < nb; ++i) nw += y[2 * n + 2 + i] * y[2 * n + 2 + i];
        nw = std::sqrt(nw);
        if (nw > cfg.c_w)
            for (std::size_t i = 0; i < nb; ++i) y[2 * n + 2 + i] *= cfg.c_w / nw;

        double xnorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) xnorm += y[i] * y[i];
        if (std::sqrt(xnorm) > 1e6) {
            rec.diverged = true;
            break;
        }
    }

    rec.t_e = memory.t_e;
    rec.sigma_best_final = memory.sigma_best;
    if (sc.law == Law::ConcurrentLearning) {
        rec.stack_size_final = stack.size();
        rec.stack_min_eig_final = stack.min_eig();
    }
    rec.summary = metrics(rec, sc.tail_start < rec.t.back() ? sc.tail_start : rec.t.front());
    return rec;
}

inline const char* law_name(Law law) {
    switch (law) {
        case Law::MRAC: return "mrac";
        case Law::ConcurrentLearning: return "concurrent";
        case Law::CompositeLearning: return "composite";
    }
    return "unknown";
}

inline std::optional<Law> law_from_name(const std::string& name) {
    if (name == "mrac") return Law::MRAC;
    if (name == "concurrent") return Law::ConcurrentLearning;
    if (name == "composite") return Law::CompositeLearning;
    return std::nullopt;
}

}  // namespace mrclc
