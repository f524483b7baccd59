#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "carleman/forward.hpp"
#include "carleman/functional.hpp"
#include "carleman/grid.hpp"
#include "carleman/optimize.hpp"

namespace carleman {

struct SuiteResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct DiagnosticsReport {
    std::vector<SuiteResult> suites;

    bool all_pass() const {
        for (const auto& s : suites)
            if (!s.pass) return false;
        return true;
    }

    std::string to_string() const {
        std::ostringstream os;
        for (const auto& s : suites)
            os << (s.pass ? "PASS" : "FAIL") << ' ' << s.name << ": " << s.detail << '\n';
        return os.str();
    }
};

namespace detail {

/// Builds the benchmark inverse-problem context on an arbitrary grid.
struct InverseContext {
    Grid grid;
    ProblemSpec problem;
    CauchyTrace trace;
    Field2D extension;
    Field2D u_true;
};

inline InverseContext make_inverse_context(Nonlinearity s, int N, int M, double noise,
                                           std::uint64_t seed) {
    InverseContext ctx{build_grid(N, M), benchmark_problem(s), {}, {}, {}};
    ctx.u_true = solve_forward(ctx.problem, ctx.grid);
    ctx.trace = extract_trace(ctx.u_true);
    if (noise > 0.0) ctx.trace = add_noise(ctx.trace, noise, seed);
    ctx.trace = differentiate_trace(ctx.trace, ctx.grid);
    ctx.extension = build_extension(ctx.trace, ctx.grid);
    return ctx;
}

}  // namespace detail

/// Analytic gradient against central finite differences of the value, all
/// three nonlinearities, lambda in {0, 1, 3}, on a small grid. The error is
/// normwise (max-abs component error over the max-abs finite-difference
/// component), which keeps finite-difference roundoff on near-zero
/// components from dominating the measurement.
inline SuiteResult check_gradient_fd(std::uint64_t seed = 11) {
    const double step = 1e-6;
    const double tol = 1e-5;
    double worst = 0.0;
    std::string worst_case;
    for (Nonlinearity s : {Nonlinearity::S1, Nonlinearity::S2, Nonlinearity::Zero}) {
        auto ctx = detail::make_inverse_context(s, 8, 8, 0.0, 0);
        for (double lambda : {0.0, 1.0, 3.0}) {
            FunctionalConfig cfg;
            cfg.lambda = lambda;
            cfg.beta = 0.00063;
            const TikhonovFunctional J(cfg, ctx.extension, ctx.problem, ctx.trace, ctx.grid);
            std::mt19937_64 eng(detail::splitmix64(seed));
            Field2D v(ctx.grid);
            for (int i = 0; i <= ctx.grid.N; ++i)
                for (int j = 0; j <= ctx.grid.M; ++j) v.at(i, j) = detail::uniform_pm1(eng);
            v.pin_columns(cfg.constrained_columns);
            const Field2D g = J.gradient(v);
            double err = 0.0, scale = 0.0;
            for (int i = 0; i <= ctx.grid.N - cfg.constrained_columns; ++i)
                for (int j = 0; j <= ctx.grid.M; ++j) {
                    Field2D vp = v, vm = v;
                    vp.at(i, j) += step;
                    vm.at(i, j) -= step;
                    const double fd = (J.value(vp) - J.value(vm)) / (2.0 * step);
                    err = std::max(err, std::abs(g.at(i, j) - fd));
                    scale = std::max(scale, std::abs(fd));
                }
            const double rel = err / scale;
            if (rel > worst) {
                worst = rel;
                worst_case = nonlinearity_name(s) + " lambda=" + std::to_string(lambda);
            }
        }
    }
    SuiteResult r{"gradient-fd", worst <= tol, ""};
    std::ostringstream os;
    os << "worst normwise rel error " << worst << " (" << worst_case << "), tol " << tol;
    r.detail = os.str();
    return r;
}

/// Projection idempotence (exact) and nonexpansiveness (slack 1e-12) on
/// random field pairs.
inline SuiteResult check_projection(int pairs = 1000, std::uint64_t seed = 12) {
    const Grid grid = build_grid(8, 8);
    std::mt19937_64 eng(detail::splitmix64(seed));
    const double R = 1.5;
    bool ok = true;
    std::string why = "idempotence exact, nonexpansive on all pairs";
    for (int k = 0; k < pairs && ok; ++k) {
        Field2D u(grid), v(grid);
        for (int i = 0; i <= grid.N; ++i)
            for (int j = 0; j <= grid.M; ++j) {
                u.at(i, j) = 3.0 * detail::uniform_pm1(eng);
                v.at(i, j) = 3.0 * detail::uniform_pm1(eng);
            }
        const Field2D pu = project_ball(u, R);
        const Field2D pv = project_ball(v, R);
        const Field2D ppu = project_ball(pu, R);
        for (std::size_t c = 0; c < pu.values().size(); ++c)
            if (ppu.values()[c] != pu.values()[c]) {
                ok = false;
                why = "idempotence violated";
            }
        const double lhs = h2_norm(pu - pv);
        const double rhs = h2_norm(u - v);
        if (lhs > rhs + 1e-12) {
            ok = false;
            why = "nonexpansiveness violated: " + std::to_string(lhs - rhs);
        }
    }
    return SuiteResult{"projection", ok, why};
}

/// Strict-convexity surrogate: on sampled pairs in the H2 ball the Bregman
/// gap of the weighted functional must dominate (beta/2) |v2-v1|_H2^2 up to
/// 1e-9. Benchmark data, lambda = 3, beta = 0.00063; the ball radius is
/// twice the H2 norm of the target field, so the sought solution itself is
/// well inside the sampled set.
inline SuiteResult check_convexity(int pairs = 200, std::uint64_t seed = 13) {
    auto ctx = detail::make_inverse_context(Nonlinearity::S1, 128, 32, 0.05, 7);
    FunctionalConfig cfg;
    cfg.lambda = 3.0;
    cfg.beta = 0.00063;
    const TikhonovFunctional J(cfg, ctx.extension, ctx.problem, ctx.trace, ctx.grid);
    Field2D v_target = ctx.u_true - ctx.extension;
    v_target.pin_columns(cfg.constrained_columns);
    const double R = 2.0 * h2_norm(v_target);
    std::mt19937_64 eng(detail::splitmix64(seed));
    Field2D proto(ctx.grid);
    proto.pin_columns(cfg.constrained_columns);
    int violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < pairs; ++k) {
        const Field2D v1 = detail::random_field_in_ball(proto, R, eng);
        const Field2D v2 = detail::random_field_in_ball(proto, R, eng);
        const Field2D g1 = J.gradient(v1);
        const Field2D diff = v2 - v1;
        const double gap = J.value(v2) - J.value(v1) - dot(g1, diff);
        const double bound = 0.5 * cfg.beta * h2_norm_sq(diff);
        const double margin = gap - bound;
        worst_margin = std::min(worst_margin, margin);
        if (margin < -1e-9) ++violations;
    }
    SuiteResult r{"convexity", violations == 0, ""};
    std::ostringstream os;
    os << violations << " violations on " << pairs << " pairs, worst margin " << worst_margin
       << " (R=" << R << ")";
    r.detail = os.str();
    return r;
}

inline DiagnosticsReport run_diagnostics() {
    DiagnosticsReport rep;
    rep.suites.push_back(check_gradient_fd());
    rep.suites.push_back(check_projection());
    rep.suites.push_back(check_convexity());
    return rep;
}

}  // namespace carleman
