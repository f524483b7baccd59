#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "carleman/forward.hpp"  // detail::splitmix64, detail::uniform_pm1
#include "carleman/grid.hpp"

namespace carleman {

/// Anything the minimizers can drive: a scalar objective over nodal fields
/// with its exact gradient. A fused value_and_gradient overload is picked
/// up automatically when present.
template <typename F>
concept Objective = requires(const F& f, const Field2D& v) {
    { f.value(v) } -> std::convertible_to<double>;
    { f.gradient(v) } -> std::convertible_to<Field2D>;
};

namespace detail {

template <typename F>
Field2D eval_with_gradient(const F& f, const Field2D& v, double& value_out) {
    if constexpr (requires(const F& g, const Field2D& w, double& o) {
                      { g.value_and_gradient(w, o) } -> std::convertible_to<Field2D>;
                  }) {
        return f.value_and_gradient(v, value_out);
    } else {
        value_out = f.value(v);
        return f.gradient(v);
    }
}

}  // namespace detail

enum class OptMethod { GradientProjection, FixedStepCG };

/// Minimizer settings. R is the ball radius in the discrete H2 norm;
/// +infinity disables projection (allowed for the CG path only).
struct OptimizerConfig {
    OptMethod method = OptMethod::FixedStepCG;
    double gamma = 1e-8;
    int iters = 1;
    double R = std::numeric_limits<double>::infinity();
    Field2D v0;

    void validate() const {
        if (gamma <= 0.0) throw std::invalid_argument("OptimizerConfig: gamma must be > 0");
        if (iters < 1) throw std::invalid_argument("OptimizerConfig: iters must be >= 1");
        if (!(R > 0.0)) throw std::invalid_argument("OptimizerConfig: R must be > 0");
        if (v0.grid().N == 0) throw std::invalid_argument("OptimizerConfig: v0 is unset");
    }
};

/// Iteration record. J_history has iters+1 entries (initial point
/// included); grad_norm_history and projected_flags have iters entries.
/// Gradient norms are plain nodal l2 norms, the geometry the fixed-step
/// iterations move in.
struct RunTrajectory {
    Field2D final;
    std::vector<double> J_history;
    std::vector<double> grad_norm_history;
    std::vector<bool> projected_flags;
};

/// Empirical curvature bounds and the induced contraction factor
///   q(gamma) = sqrt(max(0, 1 - 2 gamma kappa + gamma^2 L^2)),
/// which is < 1 exactly when 0 < gamma < gamma_bound = 2 kappa / L^2.
/// Sampled bounds use plain nodal l2 norms; the optional Hessian route is
/// exact for quadratic objectives.
struct ConvexityDiagnostics {
    double L_hat = 0.0;
    double kappa_hat = 0.0;
    double q_gamma = 0.0;
    double gamma_bound = 0.0;
    std::optional<double> hessian_L;
    std::optional<double> hessian_kappa;
};

inline double contraction_factor(double gamma, double kappa, double L) {
    return std::sqrt(std::max(0.0, 1.0 - 2.0 * gamma * kappa + gamma * gamma * L * L));
}

namespace detail {

/// Projects in place, returns whether scaling happened. Points within a
/// 1e-12 relative shell of the sphere count as inside, which makes the
/// projection exactly idempotent despite norm-recomputation roundoff.
inline bool project_ball_inplace(Field2D& v, double R) {
    const double n = h2_norm(v);
    if (n <= R * (1.0 + 1e-12)) return false;
    v *= R / n;
    return true;
}

}  // namespace detail

/// Radial projection onto the closed H2 ball of radius R. Exact metric
/// projection for the centered ball; nonexpansive; keeps pinned columns
/// zero since scaling preserves zeros.
inline Field2D project_ball(const Field2D& v, double R) {
    if (!(R > 0.0)) throw std::invalid_argument("project_ball: R must be > 0");
    Field2D out = v;
    detail::project_ball_inplace(out, R);
    return out;
}

namespace detail {

/// J and the squared gradient norm are contaminated by any non-finite node,
/// so two scalar checks cover the whole field.
inline void require_finite(double J, double grad_norm_sq, int iteration) {
    if (!std::isfinite(J) || !std::isfinite(grad_norm_sq)) {
        throw std::runtime_error("minimizer: non-finite value or gradient at iteration " +
                                 std::to_string(iteration));
    }
}

}  // namespace detail

/// Projected gradient iteration v <- P_R(v - gamma * grad J(v)).
/// Requires a finite ball radius and a start inside the closed ball.
template <Objective F>
RunTrajectory gradient_projection(const OptimizerConfig& cfg, const F& f) {
    cfg.validate();
    if (!std::isfinite(cfg.R))
        throw std::invalid_argument("gradient_projection: finite ball radius required");
    if (h2_norm(cfg.v0) > cfg.R * (1.0 + 1e-12))
        throw std::invalid_argument("gradient_projection: start point outside the ball");
    RunTrajectory traj;
    traj.J_history.reserve(static_cast<std::size_t>(cfg.iters) + 1);
    traj.grad_norm_history.reserve(static_cast<std::size_t>(cfg.iters));
    traj.projected_flags.reserve(static_cast<std::size_t>(cfg.iters));
    Field2D v = cfg.v0;
    for (int n = 0; n < cfg.iters; ++n) {
        double J = 0.0;
        Field2D g = detail::eval_with_gradient(f, v, J);
        const double gn = norm(g);
        detail::require_finite(J, gn, n);
        traj.J_history.push_back(J);
        traj.grad_norm_history.push_back(gn);
        v.axpy(-cfg.gamma, g);
        traj.projected_flags.push_back(detail::project_ball_inplace(v, cfg.R));
    }
    const double Jf = f.value(v);
    detail::require_finite(Jf, 0.0, cfg.iters);
    traj.J_history.push_back(Jf);
    traj.final = std::move(v);
    return traj;
}

/// Fixed-step nonlinear conjugate gradient, Fletcher-Reeves update with a
/// restart every N*M steps, optional projection after each step. With
/// R = +infinity this is the plain fixed-step CG the benchmark runs use.
template <Objective F>
RunTrajectory fixed_step_cg(const OptimizerConfig& cfg, const F& f) {
    cfg.validate();
    const bool project = std::isfinite(cfg.R);
    if (project && h2_norm(cfg.v0) > cfg.R * (1.0 + 1e-12))
        throw std::invalid_argument("fixed_step_cg: start point outside the ball");
    const Grid& grid = cfg.v0.grid();
    const long restart = static_cast<long>(grid.N) * grid.M;
    RunTrajectory traj;
    traj.J_history.reserve(static_cast<std::size_t>(cfg.iters) + 1);
    traj.grad_norm_history.reserve(static_cast<std::size_t>(cfg.iters));
    traj.projected_flags.reserve(static_cast<std::size_t>(cfg.iters));

    Field2D v = cfg.v0;
    double J = 0.0;
    Field2D g = detail::eval_with_gradient(f, v, J);
    double gn2 = dot(g, g);
    detail::require_finite(J, gn2, 0);
    traj.J_history.push_back(J);
    Field2D d = -1.0 * g;
    for (int n = 0; n < cfg.iters; ++n) {
        traj.grad_norm_history.push_back(std::sqrt(gn2));
        v.axpy(cfg.gamma, d);
        const bool projected = project && detail::project_ball_inplace(v, cfg.R);
        traj.projected_flags.push_back(projected);
        g = detail::eval_with_gradient(f, v, J);
        const double gn2_new = dot(g, g);
        detail::require_finite(J, gn2_new, n + 1);
        traj.J_history.push_back(J);
        double beta = gn2 > 0.0 ? gn2_new / gn2 : 0.0;
        if ((static_cast<long>(n) + 1) % restart == 0) beta = 0.0;
        d.scale_sub(beta, g);
        gn2 = gn2_new;
    }
    traj.final = std::move(v);
    return traj;
}

// ---------------------------------------------------------------------------
// sampling and small dense linear algebra for the diagnostics
// ---------------------------------------------------------------------------

namespace detail {

/// Uniform nodal noise scaled to a random H2 radius in (0, R], pinned
/// columns kept at zero.
inline Field2D random_field_in_ball(const Field2D& prototype, double R,
                                    std::mt19937_64& eng) {
    const Grid& g = prototype.grid();
    Field2D v(g);
    for (int i = 0; i <= g.N; ++i)
        for (int j = 0; j <= g.M; ++j) v.at(i, j) = uniform_pm1(eng);
    v.pin_columns(prototype.pinned_columns());
    const double n = h2_norm(v);
    const double target = R * 0.5 * (uniform_pm1(eng) + 1.0);
    if (n > 0.0 && std::isfinite(R)) v *= target / n;
    return v;
}

/// Dense LU solve with partial pivoting; A is row-major n x n and is
/// overwritten. Diagnostics-scale grids only.
inline std::vector<double> lu_solve(std::vector<double> A, std::vector<double> b) {
    const std::size_t n = b.size();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(A[perm[k] * n + k]);
        for (std::size_t r = k + 1; r < n; ++r) {
            const double cand = std::abs(A[perm[r] * n + k]);
            if (cand > best) { best = cand; piv = r; }
        }
        if (best == 0.0) throw std::runtime_error("lu_solve: singular matrix");
        std::swap(perm[k], perm[piv]);
        const double akk = A[perm[k] * n + k];
        for (std::size_t r = k + 1; r < n; ++r) {
            const double m = A[perm[r] * n + k] / akk;
            A[perm[r] * n + k] = 0.0;
            for (std::size_t c = k + 1; c < n; ++c) A[perm[r] * n + c] -= m * A[perm[k] * n + c];
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

}  // namespace detail

/// Unconstrained degrees of freedom of a field (pinned columns excluded).
struct DofMap {
    std::vector<std::pair<int, int>> nodes;

    explicit DofMap(const Field2D& prototype) {
        const Grid& g = prototype.grid();
        const int last_free = g.N - prototype.pinned_columns();
        for (int i = 0; i <= last_free; ++i)
            for (int j = 0; j <= g.M; ++j) nodes.emplace_back(i, j);
    }
    std::size_t size() const { return nodes.size(); }
};

/// Dense Hessian of a quadratic objective over the unconstrained dofs,
/// assembled column by column from gradient differences and symmetrized.
template <Objective F>
std::vector<double> dense_hessian(const F& f, const Field2D& prototype,
                                  const DofMap& map) {
    const std::size_t n = map.size();
    Field2D zero(prototype.grid());
    zero.pin_columns(prototype.pinned_columns());
    const Field2D g0 = f.gradient(zero);
    std::vector<double> H(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        Field2D e = zero;
        e.at(map.nodes[k].first, map.nodes[k].second) = 1.0;
        const Field2D gk = f.gradient(e);
        for (std::size_t r = 0; r < n; ++r) {
            H[r * n + k] =
                gk.at(map.nodes[r].first, map.nodes[r].second) -
                g0.at(map.nodes[r].first, map.nodes[r].second);
        }
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = r + 1; c < n; ++c) {
            const double s = 0.5 * (H[r * n + c] + H[c * n + r]);
            H[r * n + c] = s;
            H[c * n + r] = s;
        }
    return H;
}

/// Extremal eigenvalues of a symmetric positive definite matrix by power
/// and inverse-power iteration; Rayleigh quotients at the final iterate.
inline std::pair<double, double> extremal_eigenvalues(const std::vector<double>& H,
                                                      std::size_t n, int iters = 2000,
                                                      std::uint64_t seed = 12345) {
    std::mt19937_64 eng(detail::splitmix64(seed));
    std::vector<double> v(n), w(n);
    auto normalize = [](std::vector<double>& x) {
        double s = 0.0;
        for (double c : x) s += c * c;
        s = std::sqrt(s);
        for (double& c : x) c /= s;
        return s;
    };
    auto apply = [&](const std::vector<double>& x, std::vector<double>& out) {
        for (std::size_t r = 0; r < n; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < n; ++c) s += H[r * n + c] * x[c];
            out[r] = s;
        }
    };
    auto rayleigh = [&](const std::vector<double>& x) {
        apply(x, w);
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) s += x[r] * w[r];
        return s;  // x is unit
    };
    for (double& x : v) x = detail::uniform_pm1(eng);
    normalize(v);
    for (int it = 0; it < iters; ++it) {
        apply(v, w);
        v = w;
        normalize(v);
    }
    const double lam_max = rayleigh(v);
    for (double& x : v) x = detail::uniform_pm1(eng);
    normalize(v);
    for (int it = 0; it < iters; ++it) {
        v = detail::lu_solve(H, v);
        normalize(v);
    }
    const double lam_min = rayleigh(v);
    return {lam_max, lam_min};
}

/// Samples Lipschitz and convexity bounds over random pairs in the H2 ball.
/// The Bregman pairing is the exact first variation, a plain nodal sum, so
/// for a quadratic objective the gap equals one half of the Hessian form.
/// Coincident pairs are redrawn. With with_hessian set (quadratic
/// objectives on diagnostics-scale grids), also reports eigenvalue-exact
/// L and kappa.
template <Objective F>
ConvexityDiagnostics estimate_constants(const F& f, const Field2D& prototype, double R,
                                        int samples, double gamma, std::uint64_t seed,
                                        bool with_hessian = false) {
    if (samples < 10)
        throw std::invalid_argument("estimate_constants: need at least 10 sample pairs");
    std::mt19937_64 eng(detail::splitmix64(seed));
    double L_hat = 0.0;
    double min_ratio = std::numeric_limits<double>::infinity();
    int accepted = 0;
    while (accepted < samples) {
        const Field2D v1 = detail::random_field_in_ball(prototype, R, eng);
        const Field2D v2 = detail::random_field_in_ball(prototype, R, eng);
        Field2D diff = v2 - v1;
        const double dn = norm(diff);
        if (dn < 1e-12) continue;  // coincident pair, redraw
        const Field2D g1 = f.gradient(v1);
        const Field2D g2 = f.gradient(v2);
        L_hat = std::max(L_hat, norm(g2 - g1) / dn);
        const double gap = f.value(v2) - f.value(v1) - dot(g1, diff);
        min_ratio = std::min(min_ratio, gap / (dn * dn));
        ++accepted;
    }
    ConvexityDiagnostics d;
    d.L_hat = L_hat;
    d.kappa_hat = std::max(0.0, min_ratio);
    d.gamma_bound = L_hat > 0.0 ? 2.0 * d.kappa_hat / (L_hat * L_hat) : 0.0;
    d.q_gamma = contraction_factor(gamma, d.kappa_hat, d.L_hat);
    if (with_hessian) {
        DofMap map(prototype);
        const auto H = dense_hessian(f, prototype, map);
        const auto [lmax, lmin] = extremal_eigenvalues(H, map.size());
        d.hessian_L = lmax;
        d.hessian_kappa = 0.5 * lmin;
    }
    return d;
}

/// Largest sampled value of the ball-geometry pairing <grad J(v), v - y>
/// over random y in the H2 ball; nonpositive (up to convergence error) at
/// a constrained minimizer.
template <Objective F>
double max_variational_inequality(const F& f, const Field2D& v, double R, int samples,
                                  std::uint64_t seed) {
    std::mt19937_64 eng(detail::splitmix64(seed));
    const Field2D g = f.gradient(v);
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
        const Field2D y = detail::random_field_in_ball(v, R, eng);
        worst = std::max(worst, h2_inner(g, v - y));
    }
    return worst;
}

}  // namespace carleman
