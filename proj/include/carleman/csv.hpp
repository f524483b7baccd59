#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "carleman/forward.hpp"
#include "carleman/grid.hpp"
#include "carleman/optimize.hpp"

namespace carleman {

namespace detail {

/// Full-precision decimal rendering; round-trips doubles exactly.
inline std::string fmt_full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::ofstream open_for_write(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

}  // namespace detail

/// Writes t,p,q,dp,dq rows; dp/dq cells stay empty when the trace has not
/// been differentiated yet.
inline void write_trace_csv(const std::string& path, const CauchyTrace& trace,
                            const Grid& grid) {
    auto f = detail::open_for_write(path);
    f << "t,p,q,dp,dq\n";
    const bool d = trace.has_derivatives();
    for (int j = 0; j <= grid.M; ++j) {
        const auto k = static_cast<std::size_t>(j);
        f << detail::fmt_full(grid.t(j)) << ',' << detail::fmt_full(trace.p_vals[k]) << ','
          << detail::fmt_full(trace.q_vals[k]) << ',';
        if (d) f << detail::fmt_full(trace.dp_vals[k]);
        f << ',';
        if (d) f << detail::fmt_full(trace.dq_vals[k]);
        f << '\n';
    }
}

inline CauchyTrace read_trace_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open trace file: " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty trace file: " + path);
    if (detail::split_csv_line(line) != std::vector<std::string>{"t", "p", "q", "dp", "dq"})
        throw std::runtime_error("trace file header must be t,p,q,dp,dq: " + path);
    CauchyTrace tr;
    bool any_deriv = false;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 5)
            throw std::runtime_error("malformed trace row in " + path + ": " + line);
        tr.p_vals.push_back(std::stod(cells[1]));
        tr.q_vals.push_back(std::stod(cells[2]));
        if (!cells[3].empty() && !cells[4].empty()) {
            any_deriv = true;
            tr.dp_vals.push_back(std::stod(cells[3]));
            tr.dq_vals.push_back(std::stod(cells[4]));
        }
    }
    if (!any_deriv) {
        tr.dp_vals.clear();
        tr.dq_vals.clear();
    }
    return tr;
}

inline void write_curve_csv(const std::string& path, const std::vector<double>& x,
                            const std::vector<double>& y, const std::string& header) {
    if (x.size() != y.size())
        throw std::invalid_argument("write_curve_csv: column length mismatch");
    auto f = detail::open_for_write(path);
    f << header << '\n';
    for (std::size_t k = 0; k < x.size(); ++k)
        f << detail::fmt_full(x[k]) << ',' << detail::fmt_full(y[k]) << '\n';
}

/// iteration,J,grad_norm,projected; row 0 carries the starting value and
/// empty step fields.
inline void write_trajectory_csv(const std::string& path, const RunTrajectory& traj) {
    auto f = detail::open_for_write(path);
    f << "iteration,J,grad_norm,projected\n";
    f << "0," << detail::fmt_full(traj.J_history.at(0)) << ",,\n";
    for (std::size_t n = 0; n < traj.grad_norm_history.size(); ++n) {
        f << (n + 1) << ',' << detail::fmt_full(traj.J_history.at(n + 1)) << ','
          << detail::fmt_full(traj.grad_norm_history[n]) << ','
          << (traj.projected_flags[n] ? 1 : 0) << '\n';
    }
}

/// t,u_true,u_rec_<label>... at a fixed x column.
inline void write_slice_csv(const std::string& path, const std::vector<double>& t,
                            const std::vector<double>& u_true,
                            const std::vector<std::pair<std::string, std::vector<double>>>& recs) {
    auto f = detail::open_for_write(path);
    f << "t,u_true";
    for (const auto& [label, col] : recs) f << ",u_rec_" << label;
    f << '\n';
    for (std::size_t k = 0; k < t.size(); ++k) {
        f << detail::fmt_full(t[k]) << ',' << detail::fmt_full(u_true[k]);
        for (const auto& [label, col] : recs) f << ',' << detail::fmt_full(col[k]);
        f << '\n';
    }
}

}  // namespace carleman
