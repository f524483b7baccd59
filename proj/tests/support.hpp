#pragma once

// Helpers shared by the unit suites and the acceptance runner: independent
// dense linear algebra for normal-equations oracles, random pinned fields,
// and the smooth manufactured problem used for convergence checks.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "carleman/forward.hpp"
#include "carleman/grid.hpp"
#include "carleman/optimize.hpp"

namespace testsupport {

inline carleman::Field2D random_pinned(const carleman::Grid& g, std::uint64_t seed,
                                       double amp = 1.0, int pinned = 2) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> dist(-amp, amp);
    carleman::Field2D f(g);
    for (int i = 0; i <= g.N; ++i)
        for (int j = 0; j <= g.M; ++j) f.at(i, j) = dist(eng);
    f.pin_columns(pinned);
    return f;
}

inline std::vector<double> gauss_solve_no_refine(std::vector<double> A, std::vector<double> b) {
    const std::size_t n = b.size();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t r = k + 1; r < n; ++r)
            if (std::abs(A[perm[r] * n + k]) > std::abs(A[perm[p] * n + k])) p = r;
        std::swap(perm[k], perm[p]);
        for (std::size_t r = k + 1; r < n; ++r) {
            const double m = A[perm[r] * n + k] / A[perm[k] * n + k];
            for (std::size_t c = k; c < n; ++c) A[perm[r] * n + c] -= m * A[perm[k] * n + c];
            b[perm[r]] -= m * b[perm[k]];
        }
    }
    std::vector<double> x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[perm[k]];
        for (std::size_t c = k + 1; c < n; ++c) s -= A[perm[k] * n + c] * x[c];
        x[k] = s / A[perm[k] * n + k];
    }
    return x;
}

/// Elimination plus one refinement pass, which sharpens the optimality
/// residual at the computed minimizer.
inline std::vector<double> gauss_solve(const std::vector<double>& A,
                                       const std::vector<double>& b) {
    std::vector<double> x = gauss_solve_no_refine(A, b);
    const std::size_t n = b.size();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t c = 0; c < n; ++c) s -= A[i * n + c] * x[c];
        r[i] = s;
    }
    const std::vector<double> dx = gauss_solve_no_refine(A, r);
    for (std::size_t i = 0; i < n; ++i) x[i] += dx[i];
    return x;
}

/// Normal-equations minimizer of a quadratic objective over the
/// unconstrained dofs: solves H z = -grad(0).
template <typename F>
carleman::Field2D normal_equations_minimizer(const F& f, const carleman::Field2D& proto) {
    carleman::DofMap map(proto);
    const auto H = carleman::dense_hessian(f, proto, map);
    carleman::Field2D zero(proto.grid());
    zero.pin_columns(proto.pinned_columns());
    const carleman::Field2D g0 = f.gradient(zero);
    std::vector<double> b(map.size());
    for (std::size_t k = 0; k < map.size(); ++k)
        b[k] = -g0.at(map.nodes[k].first, map.nodes[k].second);
    const std::vector<double> z = gauss_solve(H, b);
    carleman::Field2D v = zero;
    for (std::size_t k = 0; k < map.size(); ++k)
        v.at(map.nodes[k].first, map.nodes[k].second) = z[k];
    return v;
}

/// u* = sin(pi x) cos(2t) + x^3 with S = S2 and a matched source; solver
/// error against u* is genuinely O(tau + h^2) at desk scales.
inline carleman::ProblemSpec manufactured_problem() {
    using carleman::ProblemSpec;
    ProblemSpec sp;
    sp.nonlinearity = carleman::Nonlinearity::S2;
    auto us = [](double x, double t) { return std::sin(M_PI * x) * std::cos(2 * t) + x * x * x; };
    sp.source = [us](double x, double t) {
        const double ut = -2.0 * std::sin(M_PI * x) * std::sin(2 * t);
        const double uxx = -M_PI * M_PI * std::sin(M_PI * x) * std::cos(2 * t) + 6 * x;
        const double u = us(x, t);
        return ut - uxx - 10.0 * u * u / (1.0 + u * u);
    };
    sp.initial = [us](double x) { return us(x, -0.5); };
    sp.left_boundary = [us](double t) { return us(0.0, t); };
    sp.right_boundary = [us](double t) { return us(1.0, t); };
    return sp;
}

inline double manufactured_max_err(int N, int M) {
    const carleman::Grid g = carleman::build_grid(N, M);
    const carleman::Field2D u = carleman::solve_forward(manufactured_problem(), g);
    double worst = 0.0;
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= M; ++j) {
            const double exact =
                std::sin(M_PI * g.x(i)) * std::cos(2 * g.t(j)) + g.x(i) * g.x(i) * g.x(i);
            worst = std::max(worst, std::abs(u.at(i, j) - exact));
        }
    return worst;
}

}  // namespace testsupport
