#pragma once

// Output emission: run.csv with a pinned header and shortest
// round-trip decimal doubles, summary.txt, and plain-text gnuplot
// scripts for the standard diagnostic panels.  Plus the CSV reader
// used by tests to verify exact round-trips.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "simulation.hpp"

namespace mrclc {

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string csv_header(std::size_t n, std::size_t basis_dim) {
    std::string h = "t";
    for (std::size_t i = 1; i <= n; ++i) h += ",x" + std::to_string(i);
    for (std::size_t i = 1; i <= n; ++i) h += ",xr" + std::to_string(i);
    for (std::size_t i = 1; i <= n; ++i) h += ",e" + std::to_string(i);
    h += ",u,u_pd,u_re,u_ad";
    for (std::size_t i = 1; i <= basis_dim; ++i) h += ",What" + std::to_string(i);
    h += ",Wtilde_norm,sigma_r,sigma_best,V";
    return h;
}

inline std::string run_csv_text(const RunRecord& rec) {
    std::string out = csv_header(rec.n, rec.basis_dim);
    out += '\n';
    for (std::size_t i = 0; i < rec.t.size(); ++i) {
        out += format_double(rec.t[i]);
        for (std::size_t j = 0; j < rec.n; ++j) out += ',' + format_double(rec.x[i][j]);
        for (std::size_t j = 0; j < rec.n; ++j) out += ',' + format_double(rec.xr[i][j]);
        for (std::size_t j = 0; j < rec.n; ++j) out += ',' + format_double(rec.e[i][j]);
        out += ',' + format_double(rec.u[i]);
        out += ',' + format_double(rec.u_pd[i]);
        out += ',' + format_double(rec.u_re[i]);
        out += ',' + format_double(rec.u_ad[i]);
        for (std::size_t j = 0; j < rec.basis_dim; ++j)
            out += ',' + format_double(rec.w_hat[i][j]);
        out += ',' + format_double(rec.wtilde_norm[i]);
        out += ',' + format_double(rec.sigma_r[i]);
        out += ',' + format_double(rec.sigma_best[i]);
        out += ',' + format_double(rec.v[i]);
        out += '\n';
    }
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << text;
    if (!f) throw IoError("write failed: " + path.string());
}

inline void write_run_csv(const RunRecord& rec, const std::filesystem::path& path) {
    write_text_file(path, run_csv_text(rec));
}

// Parses a run.csv produced by write_run_csv back into the recorded
// series (shortest round-trip text makes this exact).  Summary fields
// and monitor ingredients are not stored in the CSV and stay default.
inline RunRecord read_run_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw IoError("empty csv: " + path.string());

    std::size_t columns = 1;
    for (char c : line) columns += (c == ',');
    // columns = 1 + 3n + 4 + N + 4; recover n from the x block.
    std::size_t n = 0;
    {
        std::stringstream hs(line);
        std::string name;
        std::getline(hs, name, ',');  // t
        while (std::getline(hs, name, ',') && name.rfind('x', 0) == 0 &&
               name.rfind("xr", 0) != 0)
            ++n;
    }
    const std::size_t basis_dim = columns - 9 - 3 * n;

    RunRecord rec;
    rec.n = n;
    rec.basis_dim = basis_dim;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> vals;
        vals.reserve(columns);
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p <= end) {
            double v = 0.0;
            auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc())
                throw IoError("csv parse error in " + path.string() + ": '" + line + "'");
            vals.push_back(v);
            if (res.ptr == end) break;
            p = res.ptr + 1;  // skip comma
        }
        if (vals.size() != columns)
            throw IoError("csv column-count mismatch in " + path.string());
        std::size_t c = 0;
        rec.t.push_back(vals[c++]);
        Vector x(n), xr(n), e(n), w(basis_dim);
        for (std::size_t j = 0; j < n; ++j) x[j] = vals[c++];
        for (std::size_t j = 0; j < n; ++j) xr[j] = vals[c++];
        for (std::size_t j = 0; j < n; ++j) e[j] = vals[c++];
        rec.x.push_back(x);
        rec.xr.push_back(xr);
        rec.e.push_back(e);
        rec.u.push_back(vals[c++]);
        rec.u_pd.push_back(vals[c++]);
        rec.u_re.push_back(vals[c++]);
        rec.u_ad.push_back(vals[c++]);
        for (std::size_t j = 0; j < basis_dim; ++j) w[j] = vals[c++];
        rec.w_hat.push_back(w);
        rec.wtilde_norm.push_back(vals[c++]);
        rec.sigma_r.push_back(vals[c++]);
        rec.sigma_best.push_back(vals[c++]);
        rec.v.push_back(vals[c++]);
    }
    return rec;
}

inline std::string summary_text(const RunRecord& rec, const TheoremReport* report = nullptr) {
    std::ostringstream os;
    os << "scenario: " << rec.scenario_name << "\n";
    os << "law: " << law_name(rec.law) << "\n";
    os << "samples: " << rec.t.size() << "\n";
    os << "diverged: " << (rec.diverged ? "yes" : "no") << "\n";
    os << "final_Wtilde_norm: " << format_double(rec.summary.final_wtilde_norm) << "\n";
    for (std::size_t i = 0; i < rec.summary.final_param_err.size(); ++i)
        os << "final_param_err_" << (i + 1) << ": "
           << format_double(rec.summary.final_param_err[i]) << "\n";
    for (std::size_t i = 0; i < rec.summary.tail_rmse.size(); ++i)
        os << "tail_rmse_e" << (i + 1) << " (from t=" << format_double(rec.summary.tail_start)
           << "): " << format_double(rec.summary.tail_rmse[i]) << "\n";
    os << "max_abs_u: " << format_double(rec.summary.max_abs_u) << "\n";
    os << "sigma_best: " << format_double(rec.sigma_best_final) << "\n";
    if (rec.t_e)
        os << "T_e: " << format_double(*rec.t_e) << "\n";
    else
        os << "T_e: none\n";
    os << "max_window_drift: " << format_double(rec.max_window_drift) << "\n";
    if (report) {
        os << "theorem_monotone: " << (report->monotone_ok ? "pass" : "FAIL")
           << " (worst dV " << format_double(report->worst_dv) << " at t="
           << format_double(report->worst_dv_time) << ", slack "
           << format_double(report->slack) << ")\n";
        if (report->envelope_checked)
            os << "theorem_envelope: " << (report->envelope_ok ? "pass" : "FAIL")
               << " (worst margin " << format_double(report->worst_env_margin) << " at t="
               << format_double(report->worst_env_time) << ", k_s "
               << format_double(report->k_s) << ")\n";
        else
            os << "theorem_envelope: skipped\n";
    }
    return os.str();
}

// Plain-text gnuplot scripts, one per diagnostic panel, referencing
// run.csv by column number.  Emitted as scripts rather than images to
// keep the artifact dependency-free and the outputs diffable.
inline void write_plot_scripts(const RunRecord& rec, const std::filesystem::path& dir) {
    const std::size_t n = rec.n;
    const std::size_t nb = rec.basis_dim;
    const auto col = [](std::size_t c) { return std::to_string(c); };
    // 1-based columns: t=1, x block, xr block, e block, u block, What block, tail.
    const std::size_t cx = 2, cxr = 2 + n, cu = 2 + 3 * n, cw = 6 + 3 * n;
    const std::size_t csig = cw + nb + 1;

    std::string common = "set datafile separator ','\nset key outside\nset xlabel 't [s]'\n";

    std::string states = common + "set title 'states vs reference'\nplot ";
    for (std::size_t i = 0; i < n; ++i) {
        states += "'run.csv' using 1:" + col(cx + i) + " with lines title 'x" +
                  std::to_string(i + 1) + "', ";
        states += "'run.csv' using 1:" + col(cxr + i) + " with lines dt 2 title 'xr" +
                  std::to_string(i + 1) + "'" + (i + 1 < n ? ", " : "\n");
    }
    write_text_file(dir / "plot_states.gp", states);

    std::string control = common + "set title 'control input'\nplot " +
                          "'run.csv' using 1:" + col(cu) + " with lines title 'u', " +
                          "'run.csv' using 1:" + col(cu + 1) + " with lines title 'u_pd', " +
                          "'run.csv' using 1:" + col(cu + 2) + " with lines title 'u_re', " +
                          "'run.csv' using 1:" + col(cu + 3) + " with lines title 'u_ad'\n";
    write_text_file(dir / "plot_control.gp", control);

    std::string est = common + "set title 'parameter estimates'\nplot ";
    for (std::size_t i = 0; i < nb; ++i) {
        est += "'run.csv' using 1:" + col(cw + i) + " with lines title 'What" +
               std::to_string(i + 1) + "', ";
        est += format_double(rec.w_true.empty() ? 0.0 : rec.w_true[i]) +
               " with lines dt 2 title 'W*" + std::to_string(i + 1) + "'" +
               (i + 1 < nb ? ", " : "\n");
    }
    write_text_file(dir / "plot_estimates.gp", est);

    std::string sig = common + "set title 'excitation level'\nplot " +
                      "'run.csv' using 1:" + col(csig) + " with lines title 'sigma_r', " +
                      "'run.csv' using 1:" + col(csig + 1) +
                      " with lines title 'sigma_best'\n";
    write_text_file(dir / "plot_excitation.gp", sig);
}

// Writes run.csv, summary.txt and (optionally) the plot scripts into
// the given directory, creating it if needed.
inline void emit_outputs(const RunRecord& rec, const std::filesystem::path& dir,
                         bool emit_plots = false, const TheoremReport* report = nullptr) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    write_run_csv(rec, dir / "run.csv");
    write_text_file(dir / "summary.txt", summary_text(rec, report));
    if (emit_plots) write_plot_scripts(rec, dir);
}

}  // namespace mrclc
