#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "carleman/grid.hpp"

namespace carleman {

/// Lower-order nonlinearity of the parabolic operator.
/// S1 and S2 are globally bounded by 10 in absolute value.
enum class Nonlinearity { S1, S2, Zero };

inline std::string nonlinearity_name(Nonlinearity s) {
    switch (s) {
        case Nonlinearity::S1: return "s1";
        case Nonlinearity::S2: return "s2";
        case Nonlinearity::Zero: return "zero";
    }
    return "zero";
}

inline Nonlinearity nonlinearity_from_name(const std::string& name) {
    for (Nonlinearity s : {Nonlinearity::S1, Nonlinearity::S2, Nonlinearity::Zero})
        if (nonlinearity_name(s) == name) return s;
    throw std::invalid_argument("unknown nonlinearity: " + name);
}

inline double nonlinearity_value(Nonlinearity s, double u, double x, double t) {
    switch (s) {
        case Nonlinearity::S1: return 10.0 * std::cos(u + x + 2.0 * t);
        case Nonlinearity::S2: return 10.0 * u * u / (1.0 + u * u);
        case Nonlinearity::Zero: return 0.0;
    }
    return 0.0;
}

/// d/du of nonlinearity_value.
inline double nonlinearity_deriv(Nonlinearity s, double u, double x, double t) {
    switch (s) {
        case Nonlinearity::S1: return -10.0 * std::sin(u + x + 2.0 * t);
        case Nonlinearity::S2: {
            const double d = 1.0 + u * u;
            return 20.0 * u / (d * d);
        }
        case Nonlinearity::Zero: return 0.0;
    }
    return 0.0;
}

/// Value and u-derivative together; the adjacent sin/cos pair on one
/// argument compiles to a single sincos call, which matters in the
/// minimizer loop.
inline void nonlinearity_value_deriv(Nonlinearity s, double u, double x, double t,
                                     double& value, double& deriv) {
    switch (s) {
        case Nonlinearity::S1: {
            const double arg = u + x + 2.0 * t;
            value = 10.0 * std::cos(arg);
            deriv = -10.0 * std::sin(arg);
            return;
        }
        case Nonlinearity::S2: {
            const double d = 1.0 + u * u;
            value = 10.0 * u * u / d;
            deriv = 20.0 * u / (d * d);
            return;
        }
        case Nonlinearity::Zero:
            value = 0.0;
            deriv = 0.0;
            return;
    }
}

/// Data of the forward problem u_t = u_xx + S(u) + G on (0,1) x (-1/2,1/2)
/// with initial value f, left boundary g and right boundary p.
struct ProblemSpec {
    Nonlinearity nonlinearity = Nonlinearity::Zero;
    std::function<double(double, double)> source;     // G(x, t)
    std::function<double(double)> initial;            // f(x)
    std::function<double(double)> left_boundary;      // g(t)
    std::function<double(double)> right_boundary;     // p(t)
};

/// The benchmark problem family: oscillatory source, parabolic initial
/// profile, oscillatory boundary data.
inline ProblemSpec benchmark_problem(Nonlinearity s) {
    ProblemSpec spec;
    spec.nonlinearity = s;
    spec.source = [](double x, double t) {
        return 10.0 * std::sin(100.0 * ((x - 0.5) * (x - 0.5) + t * t));
    };
    spec.initial = [](double x) { return 10.0 * (x - x * x); };
    spec.left_boundary = [](double t) { return 10.0 * std::sin(10.0 * (t - 0.5) * (t + 0.5)); };
    spec.right_boundary = [](double t) { return std::sin(10.0 * (t + 0.5)); };
    return spec;
}

/// Dirichlet/Neumann data at x = 1: p_j = u(1, t_j) and the one-sided
/// difference q_j = (u_N - u_{N-1})/h; dp/dq hold the finite-difference
/// time derivatives once differentiate_trace has run.
struct CauchyTrace {
    std::vector<double> p_vals;
    std::vector<double> q_vals;
    std::vector<double> dp_vals;  // empty until differentiate_trace
    std::vector<double> dq_vals;
    double noise_level = 0.0;
    std::optional<std::uint64_t> seed;

    bool has_derivatives() const { return !dp_vals.empty() && !dq_vals.empty(); }
};

namespace detail {

/// Thomas solve of a constant-coefficient tridiagonal system
/// (-r, 1+2r, -r). Diagonally dominant for r > 0, so no pivoting.
inline void solve_tridiagonal_const(double r, std::vector<double>& rhs,
                                    std::vector<double>& scratch) {
    const std::size_t n = rhs.size();
    scratch.resize(n);
    const double diag = 1.0 + 2.0 * r;
    assert(diag > 0.0);
    double piv = diag;
    scratch[0] = -r / piv;
    rhs[0] /= piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = diag + r * scratch[i - 1];
        assert(piv != 0.0);
        scratch[i] = -r / piv;
        rhs[i] = (rhs[i] + r * rhs[i - 1]) / piv;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Uniform draw on [-1, 1] with a fixed 53-bit mapping, so the stream is
/// reproducible across platforms for a given seed.
inline double uniform_pm1(std::mt19937_64& eng) {
    const double u01 = static_cast<double>(eng() >> 11) * 0x1.0p-53;
    return 2.0 * u01 - 1.0;
}

}  // namespace detail

/// Advances the semi-implicit scheme: diffusion implicit at the new time
/// level, nonlinearity and source lagged at the old one, one tridiagonal
/// solve per step. Boundary rows and the initial column carry the data
/// exactly.
inline Field2D solve_forward(const ProblemSpec& spec, const Grid& grid) {
    const int N = grid.N, M = grid.M;
    Field2D u(grid);
    for (int i = 0; i <= N; ++i) u.at(i, 0) = spec.initial(grid.x(i));
    for (int j = 0; j <= M; ++j) {
        u.at(0, j) = spec.left_boundary(grid.t(j));
        u.at(N, j) = spec.right_boundary(grid.t(j));
    }
    const double r = grid.tau / (grid.h * grid.h);
    std::vector<double> rhs(static_cast<std::size_t>(N) - 1);
    std::vector<double> scratch;
    for (int j = 0; j < M; ++j) {
        const double tj = grid.t(j);
        for (int i = 1; i < N; ++i) {
            const double phi =
                nonlinearity_value(spec.nonlinearity, u.at(i, j), grid.x(i), tj) +
                spec.source(grid.x(i), tj);
            rhs[static_cast<std::size_t>(i) - 1] = u.at(i, j) + grid.tau * phi;
        }
        rhs.front() += r * u.at(0, j + 1);
        rhs.back() += r * u.at(N, j + 1);
        detail::solve_tridiagonal_const(r, rhs, scratch);
        for (int i = 1; i < N; ++i) u.at(i, j + 1) = rhs[static_cast<std::size_t>(i) - 1];
    }
    return u;
}

/// Reads the lateral Cauchy data off the x = 1 edge of a field.
inline CauchyTrace extract_trace(const Field2D& u) {
    const Grid& g = u.grid();
    CauchyTrace tr;
    tr.p_vals.resize(static_cast<std::size_t>(g.M) + 1);
    tr.q_vals.resize(static_cast<std::size_t>(g.M) + 1);
    for (int j = 0; j <= g.M; ++j) {
        tr.p_vals[static_cast<std::size_t>(j)] = u.at(g.N, j);
        tr.q_vals[static_cast<std::size_t>(j)] = (u.at(g.N, j) - u.at(g.N - 1, j)) / g.h;
    }
    return tr;
}

/// Perturbs p and q by level * max|.| * sigma with sigma uniform on [-1,1].
/// The Dirichlet and Neumann streams are independent, both derived from the
/// one seed, so repeated calls are bit-identical.
inline CauchyTrace add_noise(const CauchyTrace& trace, double level, std::uint64_t seed) {
    CauchyTrace out = trace;
    out.noise_level = level;
    out.seed = seed;
    out.dp_vals.clear();
    out.dq_vals.clear();
    double pm = 0.0, qm = 0.0;
    for (double v : trace.p_vals) pm = std::max(pm, std::abs(v));
    for (double v : trace.q_vals) qm = std::max(qm, std::abs(v));
    std::mt19937_64 eng_p(detail::splitmix64(seed));
    std::mt19937_64 eng_q(detail::splitmix64(seed ^ 0x6A09E667F3BCC909ULL));
    for (double& v : out.p_vals) v += level * pm * detail::uniform_pm1(eng_p);
    for (double& v : out.q_vals) v += level * qm * detail::uniform_pm1(eng_q);
    return out;
}

/// Fills dp/dq with finite-difference time derivatives: central on the
/// interior, one-sided at the endpoints. No smoothing is applied first.
inline CauchyTrace differentiate_trace(const CauchyTrace& trace, const Grid& grid) {
    if (trace.p_vals.size() != static_cast<std::size_t>(grid.M) + 1 ||
        trace.q_vals.size() != trace.p_vals.size()) {
        throw std::invalid_argument("differentiate_trace: trace length does not match grid");
    }
    CauchyTrace out = trace;
    const double tau = grid.tau;
    auto diff = [tau](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<double> d(n);
        d[0] = (v[1] - v[0]) / tau;
        d[n - 1] = (v[n - 1] - v[n - 2]) / tau;
        for (std::size_t j = 1; j + 1 < n; ++j) d[j] = (v[j + 1] - v[j - 1]) / (2.0 * tau);
        return d;
    };
    out.dp_vals = diff(trace.p_vals);
    out.dq_vals = diff(trace.q_vals);
    return out;
}

}  // namespace carleman
