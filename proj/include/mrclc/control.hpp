#pragma once

// Control law and adaptation machinery: PD + feedforward + adaptive
// control input, parameter projection, the three adaptation laws
// (classical model-reference, concurrent-learning, composite-learning),
// the moving-window regressor integrals with excitation memory, the
// concurrent-learning data stack, and the second-order command filter
// that estimates the tracking-error derivative.

#include <deque>
#include <optional>

#include "dynamics.hpp"
#include "linalg.hpp"

namespace mrclc {

struct Infeasible : std::runtime_error {
    explicit Infeasible(const std::string& what) : std::runtime_error(what) {}
};

enum class Law { MRAC, ConcurrentLearning, CompositeLearning };

// All gains and learning settings for one controller instance.
// P must solve A'P + PA = -Q for A = Lam - b ke' (residual <= 1e-10);
// build_controller_config computes it and checks A is Hurwitz.
struct ControllerConfig {
    Vector k_e;  // feedback gains, length n
    Vector k_r;  // feedforward gains, length n+1
    Matrix q;    // Lyapunov right-hand side, n x n SPD
    Matrix p;    // Lyapunov solution, n x n SPD

    double gamma = 1.0;  // learning rate
    double k_w = 0.0;    // prediction-error weight (composite law)
    double c_w = 1.0;    // parameter-ball radius for projection
    double tau_d = 1.0;  // moving-window duration, s
    double omega = 1.0;  // filter natural frequency, rad/s
    double zeta = 1.0;   // filter damping ratio

    // Implementation settings (not part of the published gain set).
    double sigma_eval_period = 0.05;   // excitation-metric cadence, s
    double recompute_period = 1.0;     // window drift-guard cadence, s
    std::size_t stack_capacity = 20;   // concurrent-learning stack size p
    double stack_warmup = 0.2;         // earliest stack-recording time, s
};

// Closed-loop error matrix A = Lam - b ke' (b = [0,...,0,1]').
inline Matrix error_matrix(const Matrix& lam, const Vector& k_e) {
    const std::size_t n = lam.rows();
    if (k_e.size() != n) throw DimensionMismatch("error_matrix: gain length");
    Matrix a = lam;
    for (std::size_t j = 0; j < n; ++j) a(n - 1, j) -= k_e[j];
    return a;
}

// Feedforward gains k_r with b kr' x_re = (A_r - Lam) xr + b_r r for all
// x_re = [xr; r].  Companion compatibility requires every row of
// (A_r - Lam) above the last to vanish.
inline Vector solve_feedforward_gain(const Matrix& lam, const Matrix& a_r, double b_r) {
    const std::size_t n = lam.rows();
    if (a_r.rows() != n || a_r.cols() != n || lam.cols() != n)
        throw DimensionMismatch("solve_feedforward_gain: shapes");
    Matrix diff = a_r - lam;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (std::abs(diff(i, j)) > 1e-12)
                throw Infeasible(
                    "solve_feedforward_gain: (A_r - Lam) has a nonzero row above the last; "
                    "the reference model is not companion-compatible with the plant");
    Vector k_r(n + 1);
    for (std::size_t j = 0; j < n; ++j) k_r[j] = diff(n - 1, j);
    k_r[n] = b_r;
    return k_r;
}

struct ControlParts {
    double u = 0.0;
    double u_pd = 0.0;  // -ke' e
    double u_re = 0.0;  // kr' x_re
    double u_ad = 0.0;  // -What' Phi(x)
};

inline ControlParts control_input(const ControllerConfig& cfg, const Vector& e,
                                  const Vector& x_re, const Vector& phi, const Vector& w_hat) {
    ControlParts parts;
    parts.u_pd = -dot(cfg.k_e, e);
    parts.u_re = dot(cfg.k_r, x_re);
    parts.u_ad = -dot(w_hat, phi);
    parts.u = parts.u_pd + parts.u_re + parts.u_ad;
    return parts;
}

// Ball projection: removes the outward radial component of v when What
// sits on/outside the ball of radius c_w and v points outward.  For any
// gamma > 0, project(w, gamma v) == gamma project(w, v): the branch
// condition is scale-invariant and both branches are linear in v.
inline Vector project(const Vector& w_hat, const Vector& v, double c_w) {
    const double nw2 = dot(w_hat, w_hat);
    if (nw2 >= c_w * c_w) {
        const double wv = dot(w_hat, v);
        if (wv > 0.0) {
            Vector out(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - w_hat[i] * wv / nw2;
            return out;
        }
    }
    return v;
}

// Second-order unit-gain command filter producing (e_n estimate,
// e_n-derivative estimate).  Initialize with e_hat = e_n(0), de_hat = 0.
struct FilterState {
    double e_hat = 0.0;
    double de_hat = 0.0;
};

// Filter dynamics: e_hat' = de_hat, de_hat' = -2 zeta omega de_hat
// + omega^2 (e_n - e_hat).  Exposed so the run loop can integrate the
// filter inside the combined RK4 state.
inline FilterState filter_derivative(const FilterState& s, double e_n, double omega,
                                     double zeta) {
    return FilterState{s.de_hat, -2.0 * zeta * omega * s.de_hat + omega * omega * (e_n - s.e_hat)};
}

// Stand-alone advance over one step holding the input constant; the
// closed-loop run integrates the filter jointly with the plant instead.
inline FilterState filter_step(const FilterState& state, double e_n, double omega, double zeta,
                               double h) {
    Vector y{state.e_hat, state.de_hat};
    y = rk4_step(
        [&](double, const Vector& s) {
            FilterState d = filter_derivative(FilterState{s[0], s[1]}, e_n, omega, zeta);
            return Vector{d.e_hat, d.de_hat};
        },
        0.0, y, h);
    return FilterState{y[0], y[1]};
}

// Moving-window trapezoidal integrals over the last tau_d seconds:
//   Theta(t) = integral of Phi Phi' dtau,   G(t) ~ Theta(t) W*.
// Samples are pushed once per integration step; eviction subtracts the
// exact stored contribution and a periodic full recomputation cancels
// floating-point drift.  For t < tau_d the integral runs over [0, t].
class WindowBuffer {
  public:
    WindowBuffer() = default;

    WindowBuffer(std::size_t dimension, double tau_d, double h)
        : h_(h),
          capacity_(static_cast<std::size_t>(std::llround(tau_d / h))),
          theta_(dimension, dimension),
          g_(dimension, 0.0) {}

    // moment_integrand = Phi * (de_hat + What'Phi - a_n'e); see the run loop.
    void push(const Vector& phi, const Vector& moment_integrand) {
        if (!samples_.empty()) {
            const Sample& last = samples_.back();
            add_pair(last.phi, phi, last.integrand, moment_integrand, +1.0);
        }
        samples_.push_back(Sample{phi, moment_integrand});
        if (samples_.size() > capacity_ + 1) {
            Sample oldest = std::move(samples_.front());
            samples_.pop_front();
            const Sample& next = samples_.front();
            add_pair(oldest.phi, next.phi, oldest.integrand, next.integrand, -1.0);
        }
    }

    const Matrix& theta() const { return theta_; }
    const Vector& g() const { return g_; }
    std::size_t size() const { return samples_.size(); }

    // Direct quadrature over the stored samples (drift-guard oracle).
    void recompute(Matrix& theta_out, Vector& g_out) const {
        theta_out = Matrix(g_.size(), g_.size());
        g_out.assign(g_.size(), 0.0);
        for (std::size_t k = 0; k + 1 < samples_.size(); ++k) {
            const Sample& a = samples_[k];
            const Sample& b = samples_[k + 1];
            Matrix dm = 0.5 * h_ * (outer(a.phi, a.phi) + outer(b.phi, b.phi));
            theta_out = theta_out + dm;
            for (std::size_t i = 0; i < g_out.size(); ++i)
                g_out[i] += 0.5 * h_ * (a.integrand[i] + b.integrand[i]);
        }
    }

    // Replaces the running sums with the direct quadrature and reports
    // the worst absolute drift that had accumulated.
    double recompute_and_swap() {
        Matrix theta_d;
        Vector g_d;
        recompute(theta_d, g_d);
        double drift = 0.0;
        for (std::size_t i = 0; i < g_.size(); ++i) {
            for (std::size_t j = 0; j < g_.size(); ++j)
                drift = std::max(drift, std::abs(theta_(i, j) - theta_d(i, j)));
            drift = std::max(drift, std::abs(g_[i] - g_d[i]));
        }
        theta_ = std::move(theta_d);
        g_ = std::move(g_d);
        return drift;
    }

  private:
    struct Sample {
        Vector phi;
        Vector integrand;
    };

    void add_pair(const Vector& phi_a, const Vector& phi_b, const Vector& int_a,
                  const Vector& int_b, double sign) {
        Matrix dm = 0.5 * h_ * (outer(phi_a, phi_a) + outer(phi_b, phi_b));
        if (sign > 0.0)
            theta_ = theta_ + dm;
        else
            theta_ = theta_ - dm;
        for (std::size_t i = 0; i < g_.size(); ++i)
            g_[i] += sign * 0.5 * h_ * (int_a[i] + int_b[i]);
    }

    double h_ = 0.0;
    std::size_t capacity_ = 0;
    std::deque<Sample> samples_;
    Matrix theta_;
    Vector g_;
};

// Best-so-far excitation snapshot.  The composite law consumes the
// frozen pair (Theta_e, G_e) attained at the running maximum of
// sigma_r(t) = min_eig(Theta(t)); freezing both together keeps the
// prediction error consistent (eps = G_e - Theta_e What = Theta_e Wtilde
// when G_e is exact).
struct ExcitationMemory {
    double sigma_best = 0.0;
    Matrix theta_frozen;
    Vector g_frozen;
    std::optional<double> t_e;

    explicit ExcitationMemory(std::size_t dimension = 0)
        : theta_frozen(dimension == 0 ? Matrix() : Matrix(dimension, dimension)),
          g_frozen(dimension, 0.0) {}
};

// Evaluates sigma_r on the current window and freezes a new snapshot on
// improvement.  Returns sigma_r(t) for recording.
inline double excitation_update(ExcitationMemory& mem, const WindowBuffer& buf, double t) {
    const double sigma_r = min_eig_sym(buf.theta());
    if (sigma_r > mem.sigma_best) {
        mem.sigma_best = sigma_r;
        mem.theta_frozen = buf.theta();
        mem.g_frozen = buf.g();
        mem.t_e = t;
    }
    return sigma_r;
}

// Concurrent-learning data stack of (Phi(x_j), fhat_j) pairs, managed by
// singular-value maximization of Z Z' where Z has columns Phi(x_j).
class DataStack {
  public:
    struct Entry {
        Vector phi;
        double f_hat = 0.0;
    };

    DataStack() = default;
    DataStack(std::size_t dimension, std::size_t capacity)
        : dimension_(dimension), capacity_(capacity) {}

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    Matrix zzt() const {
        Matrix m(dimension_, dimension_);
        for (const Entry& en : entries_) m = m + outer(en.phi, en.phi);
        return m;
    }

    double min_eig() const { return min_eig_sym(zzt()); }

    // Admission by excitation gain: a candidate must either repair rank
    // deficiency or raise min_eig(ZZ') by at least 1e-6 (prevents churn
    // from near-duplicate points).  When full, the entry whose removal
    // costs the least is swapped out, and only if the swap still gains.
    bool offer(const Vector& phi, double f_hat) {
        const Matrix zz = zzt();
        const Matrix cand = outer(phi, phi);
        const double me = min_eig_sym(zz);
        if (entries_.size() < capacity_) {
            const bool rank_deficient = me <= 1e-12 * std::max(1.0, zz.frobenius_norm());
            if (rank_deficient || min_eig_sym(zz + cand) >= me + kGainThreshold) {
                entries_.push_back(Entry{phi, f_hat});
                return true;
            }
            return false;
        }
        std::size_t best_idx = 0;
        double best_remaining = -1.0;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const double mi = min_eig_sym(zz - outer(entries_[i].phi, entries_[i].phi));
            if (mi > best_remaining) {
                best_remaining = mi;
                best_idx = i;
            }
        }
        Matrix swapped = zz - outer(entries_[best_idx].phi, entries_[best_idx].phi) + cand;
        if (min_eig_sym(swapped) > me + kGainThreshold) {
            entries_[best_idx] = Entry{phi, f_hat};
            return true;
        }
        return false;
    }

  private:
    static constexpr double kGainThreshold = 1e-6;

    std::size_t dimension_ = 0;
    std::size_t capacity_ = 0;
    std::vector<Entry> entries_;
};

inline bool record_point(DataStack& stack, const Vector& phi, double f_hat) {
    return stack.offer(phi, f_hat);
}

// e'Pb for b = [0,...,0,1]': the last component of Pe (P symmetric).
inline double error_drive(const ControllerConfig& cfg, const Vector& e) {
    Vector pe = cfg.p * e;
    return pe[pe.size() - 1];
}

// Classical model-reference law: What' = proj(What, gamma e'Pb Phi).
inline Vector mrac_rate(const ControllerConfig& cfg, const Vector& e, const Vector& phi,
                        const Vector& w_hat) {
    const double drive = error_drive(cfg, e);
    Vector v(phi.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = cfg.gamma * (drive * phi[i]);
    return project(w_hat, v, cfg.c_w);
}

// Composite law: adds the windowed prediction error
// eps = G_e - Theta_e What to the tracking-error drive.
inline Vector composite_rate(const ControllerConfig& cfg, const Vector& e, const Vector& phi,
                             const ExcitationMemory& mem, const Vector& w_hat) {
    const double drive = error_drive(cfg, e);
    Vector eps = mem.theta_frozen * w_hat;
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = mem.g_frozen[i] - eps[i];
    Vector v(phi.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = cfg.gamma * (drive * phi[i] + cfg.k_w * eps[i]);
    return project(w_hat, v, cfg.c_w);
}

// Concurrent-learning law: adds the stored-data residuals
// eps_j = fhat_j - What'Phi(x_j), re-evaluated with the current What.
inline Vector concurrent_rate(const ControllerConfig& cfg, const Vector& e, const Vector& phi,
                              const DataStack& stack, const Vector& w_hat) {
    const double drive = error_drive(cfg, e);
    Vector sum(phi.size(), 0.0);
    for (const DataStack::Entry& en : stack.entries()) {
        const double eps_j = en.f_hat - dot(w_hat, en.phi);
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += eps_j * en.phi[i];
    }
    Vector v(phi.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = cfg.gamma * (drive * phi[i] + sum[i]);
    return project(w_hat, v, cfg.c_w);
}

// Builds a full configuration from gains: solves the Lyapunov equation
// for P and verifies A = Lam - b ke' is strictly Hurwitz.
inline ControllerConfig build_controller_config(const Matrix& lam, const Matrix& a_r, double b_r,
                                                Vector k_e, Matrix q, double gamma, double k_w,
                                                double c_w, double tau_d, double omega,
                                                double zeta) {
    ControllerConfig cfg;
    Matrix a = error_matrix(lam, k_e);
    if (!is_hurwitz(a)) throw NotHurwitz("controller config: Lam - b ke' is not Hurwitz");
    cfg.p = solve_lyapunov(a, q);
    cfg.q = std::move(q);
    cfg.k_e = std::move(k_e);
    cfg.k_r = solve_feedforward_gain(lam, a_r, b_r);
    cfg.gamma = gamma;
    cfg.k_w = k_w;
    cfg.c_w = c_w;
    cfg.tau_d = tau_d;
    cfg.omega = omega;
    cfg.zeta = zeta;
    return cfg;
}

}  // namespace mrclc
