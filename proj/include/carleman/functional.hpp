#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "carleman/forward.hpp"
#include "carleman/grid.hpp"
#include "carleman/weight.hpp"

namespace carleman {

/// Parameters of the weighted Tikhonov functional
///   J(v) = prefactor * h*tau * sum r(v)^2 phi^2  +  beta * |v|_H2^2.
///
/// `lambda` overrides the lambda stored inside `cwf`, so a config carries a
/// single source of truth for the weight strength. The balancing prefactor
/// exp(-2 lambda (alpha + epsilon)) is off unless balance_exponent is set.
struct FunctionalConfig {
    double lambda = 0.0;
    double beta = 0.5;
    CwfSpec cwf{};  // family defaults to ParabolicQuadratic
    std::optional<std::pair<double, double>> balance_exponent;  // (alpha, epsilon)
    int constrained_columns = 2;

    void validate() const {
        if (!(beta > 0.0 && beta < 1.0))
            throw std::invalid_argument("FunctionalConfig: beta must lie in (0, 1)");
        if (lambda < 0.0)
            throw std::invalid_argument("FunctionalConfig: lambda must be >= 0");
        if (constrained_columns < 2)
            throw std::invalid_argument(
                "FunctionalConfig: need at least the two trace columns constrained");
    }
};

/// PDE residual values on the interior box i in [1, N-1], j in [0, M-1].
class ResidualField {
public:
    ResidualField(const Grid& grid)
        : grid_(grid),
          values_(static_cast<std::size_t>(grid.N - 1) * grid.M, 0.0) {}

    const Grid& grid() const { return grid_; }
    int i_begin() const { return 1; }
    int i_end() const { return grid_.N; }    // exclusive
    int j_begin() const { return 0; }
    int j_end() const { return grid_.M; }    // exclusive

    double& at(int i, int j) { return values_[idx(i, j)]; }
    double at(int i, int j) const { return values_[idx(i, j)]; }
    const std::vector<double>& values() const { return values_; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i - 1) * grid_.M + static_cast<std::size_t>(j);
    }

    Grid grid_;
    std::vector<double> values_;
};

/// Affine data extension F(x, t) = p(t) + (x - 1) q(t). By construction it
/// reproduces the Dirichlet trace exactly at x = 1 and its one-sided
/// x-difference there equals q exactly.
inline Field2D build_extension(const CauchyTrace& trace, const Grid& grid) {
    if (trace.p_vals.size() != static_cast<std::size_t>(grid.M) + 1 ||
        trace.q_vals.size() != trace.p_vals.size()) {
        throw std::invalid_argument("build_extension: trace length does not match grid");
    }
    Field2D F(grid);
    for (int i = 0; i <= grid.N; ++i) {
        const double xm1 = grid.x(i) - 1.0;
        for (int j = 0; j <= grid.M; ++j)
            F.at(i, j) = trace.p_vals[static_cast<std::size_t>(j)] +
                         xm1 * trace.q_vals[static_cast<std::size_t>(j)];
    }
    return F;
}

/// Discretized weighted Tikhonov functional with its exact nodal gradient.
///
/// Precomputes the weight grid, the extension F, the source samples and the
/// data-derivative term once, so value/gradient evaluations inside a
/// minimizer loop touch each node a constant number of times.
///
/// Residual stencil: forward difference in t, central second difference in
/// x at the old time level, nonlinearity at the stencil center:
///   r_ij = (v_{i,j+1} - v_ij)/tau - (v_{i-1,j} - 2 v_ij + v_{i+1,j})/h^2
///          - S(v_ij + F_ij) - G_ij + dp_j + (x_i - 1) dq_j.
///
/// The gradient holds the exact partial derivatives of the discrete value
/// with respect to each nodal v_ij; entries on the constrained trailing
/// columns are identically zero, which keeps iterates in the subspace with
/// zero Dirichlet and Neumann traces at x = 1.
class TikhonovFunctional {
public:
    TikhonovFunctional(const FunctionalConfig& cfg, Field2D extension,
                       const ProblemSpec& problem, const CauchyTrace& trace,
                       const Grid& grid)
        : cfg_(cfg), grid_(grid), extension_(std::move(extension)), weight_(grid) {
        cfg_.validate();
        if (!trace.has_derivatives()) {
            throw std::invalid_argument(
                "TikhonovFunctional: trace has no dp/dq; run differentiate_trace first");
        }
        nonlinearity_ = problem.nonlinearity;
        dp_ = trace.dp_vals;
        dq_ = trace.dq_vals;
        CwfSpec w = cfg_.cwf;
        w.lambda = cfg_.lambda;
        weight_ = cwf_weight_grid(w, grid);
        source_ = Field2D::from_function(grid, problem.source);
        prefactor_ = 1.0;
        if (cfg_.balance_exponent) {
            prefactor_ = balance_prefactor(cfg_.lambda, cfg_.balance_exponent->first,
                                           cfg_.balance_exponent->second);
        }
    }

    const Grid& grid() const { return grid_; }
    const FunctionalConfig& config() const { return cfg_; }
    const Field2D& extension() const { return extension_; }
    double prefactor() const { return prefactor_; }

    ResidualField residual(const Field2D& v) const {
        ResidualField r(grid_);
        const int N = grid_.N, M = grid_.M;
        const double h = grid_.h, tau = grid_.tau;
        for (int i = 1; i < N; ++i) {
            const double xi = grid_.x(i);
            for (int j = 0; j < M; ++j) {
                const double vt = (v.at(i, j + 1) - v.at(i, j)) / tau;
                const double vxx =
                    (v.at(i - 1, j) - 2.0 * v.at(i, j) + v.at(i + 1, j)) / (h * h);
                const double s = nonlinearity_value(
                    nonlinearity_, v.at(i, j) + extension_.at(i, j), xi, grid_.t(j));
                const double data = dp_[static_cast<std::size_t>(j)] +
                                    (xi - 1.0) * dq_[static_cast<std::size_t>(j)];
                r.at(i, j) = vt - vxx - s - source_.at(i, j) + data;
            }
        }
        return r;
    }

    /// Weighted squared residual plus the regularization term. The node sum
    /// runs in fixed row-major order so the value is reproducible bit for
    /// bit.
    double value(const Field2D& v) const {
        const ResidualField r = residual(v);
        double s = 0.0;
        for (int i = 1; i < grid_.N; ++i)
            for (int j = 0; j < grid_.M; ++j) {
                const double rv = r.at(i, j);
                s += rv * rv * weight_.at(i, j);
            }
        return prefactor_ * grid_.h * grid_.tau * s + cfg_.beta * h2_norm_sq(v);
    }

    Field2D gradient(const Field2D& v) const {
        double ignored = 0.0;
        return value_and_gradient(v, ignored);
    }

    /// Fused evaluation shared by the minimizers. Pass one assembles the
    /// weighted residual (row-major, the same summation order as value(),
    /// so both report the same J bit for bit); pass two gathers the
    /// residual adjoint per node, which keeps the hot loop free of
    /// read-modify-write scatter; the H2 term then accumulates on top.
    Field2D value_and_gradient(const Field2D& v, double& value_out) const {
        const int N = grid_.N, M = grid_.M;
        const double h = grid_.h, tau = grid_.tau;
        const double inv_tau = 1.0 / tau, inv_h2 = 1.0 / (h * h);
        Field2D wr(grid_);   // scale * r * w on the residual box, 0 elsewhere
        Field2D sder(grid_); // S'(v + F) on the residual box
        double s = 0.0;
        const double scale = 2.0 * prefactor_ * h * tau;
        for (int i = 1; i < N; ++i) {
            const double xi = grid_.x(i);
            for (int j = 0; j < M; ++j) {
                const double vt = (v.at(i, j + 1) - v.at(i, j)) / tau;
                const double vxx =
                    (v.at(i - 1, j) - 2.0 * v.at(i, j) + v.at(i + 1, j)) / (h * h);
                double sv = 0.0, sp = 0.0;
                nonlinearity_value_deriv(nonlinearity_, v.at(i, j) + extension_.at(i, j), xi,
                                         grid_.t(j), sv, sp);
                const double data = dp_[static_cast<std::size_t>(j)] +
                                    (xi - 1.0) * dq_[static_cast<std::size_t>(j)];
                const double rv = vt - vxx - sv - source_.at(i, j) + data;
                const double w = weight_.at(i, j);
                s += rv * rv * w;
                wr.at(i, j) = scale * rv * w;
                sder.at(i, j) = sp;
            }
        }
        Field2D g(grid_);
        for (int i = 0; i <= N; ++i) {
            for (int j = 0; j <= M; ++j) {
                double acc = 0.0;
                if (j > 0) acc += wr.at(i, j - 1) * inv_tau;
                acc += wr.at(i, j) * (-inv_tau + 2.0 * inv_h2 - sder.at(i, j));
                if (i > 0) acc -= wr.at(i - 1, j) * inv_h2;
                if (i < N) acc -= wr.at(i + 1, j) * inv_h2;
                g.at(i, j) = acc;
            }
        }
        const double reg = h2_norm_sq_with_gradient(v, cfg_.beta, g);
        g.pin_columns(cfg_.constrained_columns);
        value_out = prefactor_ * h * tau * s + cfg_.beta * reg;
        return g;
    }

private:
    FunctionalConfig cfg_;
    Grid grid_;
    Field2D extension_;
    Field2D weight_;   // phi_lambda^2 at the nodes
    Field2D source_;   // G at the nodes
    std::vector<double> dp_, dq_;
    Nonlinearity nonlinearity_ = Nonlinearity::Zero;
    double prefactor_ = 1.0;
};

inline ResidualField residual(const Field2D& v, const Field2D& extension,
                              const ProblemSpec& problem, const CauchyTrace& trace,
                              const Grid& grid) {
    FunctionalConfig cfg;
    cfg.beta = 0.5;  // irrelevant to the residual
    return TikhonovFunctional(cfg, extension, problem, trace, grid).residual(v);
}

inline double evaluate(const Field2D& v, const FunctionalConfig& cfg,
                       const Field2D& extension, const ProblemSpec& problem,
                       const CauchyTrace& trace, const Grid& grid) {
    return TikhonovFunctional(cfg, extension, problem, trace, grid).value(v);
}

inline Field2D gradient(const Field2D& v, const FunctionalConfig& cfg,
                        const Field2D& extension, const ProblemSpec& problem,
                        const CauchyTrace& trace, const Grid& grid) {
    return TikhonovFunctional(cfg, extension, problem, trace, grid).gradient(v);
}

}  // namespace carleman
