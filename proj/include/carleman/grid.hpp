#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace carleman {

/// Uniform space-time mesh on (0,1) x (-1/2,1/2).
///
/// N space intervals of width h = 1/N, M time intervals of width tau = 1/M.
/// Both endpoints are included, so there are (N+1) x (M+1) nodes.
struct Grid {
    int N = 0;
    int M = 0;
    double h = 0.0;
    double tau = 0.0;
    std::vector<double> x_nodes;  // x_i = i*h,        i in [0, N]
    std::vector<double> t_nodes;  // t_j = -1/2 + j*tau, j in [0, M]

    double x(int i) const { return x_nodes[static_cast<std::size_t>(i)]; }
    double t(int j) const { return t_nodes[static_cast<std::size_t>(j)]; }
    int rows() const { return N + 1; }
    int cols() const { return M + 1; }
    std::size_t node_count() const { return static_cast<std::size_t>(rows()) * cols(); }

    bool same_shape(const Grid& other) const { return N == other.N && M == other.M; }
};

/// Builds the uniform mesh. Meshes with fewer than 4 intervals per
/// direction cannot host the interior stencils and are rejected.
inline Grid build_grid(int N, int M) {
    if (N < 4 || M < 4) {
        throw std::invalid_argument(
            "build_grid: degenerate mesh, need N >= 4 and M >= 4 (got N=" +
            std::to_string(N) + ", M=" + std::to_string(M) + ")");
    }
    Grid g;
    g.N = N;
    g.M = M;
    g.h = 1.0 / N;
    g.tau = 1.0 / M;
    g.x_nodes.resize(static_cast<std::size_t>(N) + 1);
    g.t_nodes.resize(static_cast<std::size_t>(M) + 1);
    for (int i = 0; i <= N; ++i) g.x_nodes[static_cast<std::size_t>(i)] = i * g.h;
    for (int j = 0; j <= M; ++j) g.t_nodes[static_cast<std::size_t>(j)] = -0.5 + j * g.tau;
    // pin the corners exactly; accumulated i*h roundoff stays within one ulp anyway
    g.x_nodes.front() = 0.0;
    g.x_nodes.back() = 1.0;
    g.t_nodes.front() = -0.5;
    g.t_nodes.back() = 0.5;
    return g;
}

/// Nodal scalar field over a Grid.
///
/// `pinned_columns` records how many trailing x-columns (the x = 1 side)
/// are held at zero; that is how zero Dirichlet and Neumann traces are
/// encoded on the mesh.
class Field2D {
public:
    Field2D() = default;

    explicit Field2D(const Grid& grid, double fill = 0.0)
        : grid_(grid), values_(grid.node_count(), fill) {}

    template <typename Fn>
    static Field2D from_function(const Grid& grid, Fn&& f) {
        Field2D out(grid);
        for (int i = 0; i <= grid.N; ++i)
            for (int j = 0; j <= grid.M; ++j)
                out.at(i, j) = f(grid.x(i), grid.t(j));
        return out;
    }

    const Grid& grid() const { return grid_; }
    int rows() const { return grid_.rows(); }
    int cols() const { return grid_.cols(); }

    double& at(int i, int j) { return values_[idx(i, j)]; }
    double at(int i, int j) const { return values_[idx(i, j)]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    int pinned_columns() const { return pinned_columns_; }

    /// Zeroes the k trailing x-columns and records the constraint.
    void pin_columns(int k) {
        pinned_columns_ = k;
        for (int i = grid_.N - k + 1; i <= grid_.N; ++i)
            for (int j = 0; j <= grid_.M; ++j) at(i, j) = 0.0;
    }

    // in-place linear algebra used by the minimizers
    Field2D& operator+=(const Field2D& o) {
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
        return *this;
    }
    Field2D& operator-=(const Field2D& o) {
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
        return *this;
    }
    Field2D& operator*=(double a) {
        for (double& v : values_) v *= a;
        return *this;
    }
    /// this += a * other
    void axpy(double a, const Field2D& o) {
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += a * o.values_[k];
    }
    /// this = a * this - other, one pass (conjugate-direction update)
    void scale_sub(double a, const Field2D& o) {
        for (std::size_t k = 0; k < values_.size(); ++k)
            values_[k] = a * values_[k] - o.values_[k];
    }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * grid_.cols() + static_cast<std::size_t>(j);
    }

    Grid grid_;
    std::vector<double> values_;
    int pinned_columns_ = 0;
};

inline Field2D operator+(Field2D a, const Field2D& b) { a += b; return a; }
inline Field2D operator-(Field2D a, const Field2D& b) { a -= b; return a; }
inline Field2D operator*(double s, Field2D a) { a *= s; return a; }

/// Plain nodal sums, no quadrature weight. These back the minimizer
/// geometry; the regularization norm is h2_norm_sq below.
inline double dot(const Field2D& a, const Field2D& b) {
    double s = 0.0;
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t k = 0; k < av.size(); ++k) s += av[k] * bv[k];
    return s;
}

inline double norm(const Field2D& a) { return std::sqrt(dot(a, a)); }

inline double max_abs(const Field2D& a) {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

/// Inclusive index box [i0,i1] x [j0,j1]; empty boxes use i1 < i0.
struct IndexBox {
    int i0 = 0, i1 = -1, j0 = 0, j1 = -1;
    bool contains(int i, int j) const { return i >= i0 && i <= i1 && j >= j0 && j <= j1; }
};

/// Finite-difference derivative fields of a nodal field.
///
/// First derivatives are central on interior nodes and one-sided on the
/// boundary rows/columns, so their valid region is the full node box.
/// Second and mixed derivatives exist on interior nodes only; outside
/// their valid region the fields are zero-filled.
struct DerivativeBundle {
    Field2D d_x, d_t, d_xx, d_tt, d_xt;
    IndexBox x_box, t_box, xx_box, tt_box, xt_box;
};

inline DerivativeBundle derivative_bundle(const Field2D& f) {
    const Grid& g = f.grid();
    const int N = g.N, M = g.M;
    const double h = g.h, tau = g.tau;
    DerivativeBundle b{Field2D(g), Field2D(g), Field2D(g), Field2D(g), Field2D(g),
                       {0, N, 0, M}, {0, N, 0, M},
                       {1, N - 1, 0, M}, {0, N, 1, M - 1},
                       {1, N - 1, 1, M - 1}};
    for (int j = 0; j <= M; ++j) {
        b.d_x.at(0, j) = (f.at(1, j) - f.at(0, j)) / h;
        b.d_x.at(N, j) = (f.at(N, j) - f.at(N - 1, j)) / h;
        for (int i = 1; i < N; ++i) {
            b.d_x.at(i, j) = (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * h);
            b.d_xx.at(i, j) = (f.at(i - 1, j) - 2.0 * f.at(i, j) + f.at(i + 1, j)) / (h * h);
        }
    }
    for (int i = 0; i <= N; ++i) {
        b.d_t.at(i, 0) = (f.at(i, 1) - f.at(i, 0)) / tau;
        b.d_t.at(i, M) = (f.at(i, M) - f.at(i, M - 1)) / tau;
        for (int j = 1; j < M; ++j) {
            b.d_t.at(i, j) = (f.at(i, j + 1) - f.at(i, j - 1)) / (2.0 * tau);
            b.d_tt.at(i, j) = (f.at(i, j - 1) - 2.0 * f.at(i, j) + f.at(i, j + 1)) / (tau * tau);
        }
    }
    for (int i = 1; i < N; ++i)
        for (int j = 1; j < M; ++j)
            b.d_xt.at(i, j) = (f.at(i + 1, j + 1) - f.at(i + 1, j - 1) -
                               f.at(i - 1, j + 1) + f.at(i - 1, j - 1)) /
                              (4.0 * h * tau);
    return b;
}

namespace detail {

// Fused pass over the H2 stencils; avoids materializing a DerivativeBundle
// on the minimizer hot path. All sweeps run row-major (j inner). Agreement
// with the bundle route is tested.
inline void h2_accumulate(const Field2D& f, double& sum_sq) {
    const Grid& g = f.grid();
    const int N = g.N, M = g.M;
    const double h = g.h, tau = g.tau;
    double s = 0.0;
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= M; ++j) {
            const double v = f.at(i, j);
            s += v * v;
        }
    for (int j = 0; j <= M; ++j) {
        const double dl = (f.at(1, j) - f.at(0, j)) / h;
        const double dr = (f.at(N, j) - f.at(N - 1, j)) / h;
        s += dl * dl + dr * dr;
    }
    for (int i = 1; i < N; ++i)
        for (int j = 0; j <= M; ++j) {
            const double dx = (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * h);
            const double dxx = (f.at(i - 1, j) - 2.0 * f.at(i, j) + f.at(i + 1, j)) / (h * h);
            s += dx * dx + dxx * dxx;
        }
    for (int i = 0; i <= N; ++i) {
        const double dl = (f.at(i, 1) - f.at(i, 0)) / tau;
        const double dr = (f.at(i, M) - f.at(i, M - 1)) / tau;
        s += dl * dl + dr * dr;
        for (int j = 1; j < M; ++j) {
            const double dt = (f.at(i, j + 1) - f.at(i, j - 1)) / (2.0 * tau);
            const double dtt = (f.at(i, j - 1) - 2.0 * f.at(i, j) + f.at(i, j + 1)) / (tau * tau);
            s += dt * dt + dtt * dtt;
        }
    }
    for (int i = 1; i < N; ++i)
        for (int j = 1; j < M; ++j) {
            const double dxt = (f.at(i + 1, j + 1) - f.at(i + 1, j - 1) -
                                f.at(i - 1, j + 1) + f.at(i - 1, j - 1)) /
                               (4.0 * h * tau);
            s += dxt * dxt;
        }
    sum_sq = s;
}

}  // namespace detail

/// Squared discrete H2 norm: h*tau times the nodal sum of the field value
/// and all five derivative fields, each squared over its valid region.
/// This is the regularization norm and the ball norm of the minimizers.
inline double h2_norm_sq(const Field2D& f) {
    double s = 0.0;
    detail::h2_accumulate(f, s);
    return f.grid().h * f.grid().tau * s;
}

inline double h2_norm(const Field2D& f) { return std::sqrt(h2_norm_sq(f)); }

/// Inner product inducing h2_norm_sq (same stencils, polarized).
inline double h2_inner(const Field2D& a, const Field2D& b) {
    const DerivativeBundle da = derivative_bundle(a);
    const DerivativeBundle db = derivative_bundle(b);
    double s = dot(a, b) + dot(da.d_x, db.d_x) + dot(da.d_t, db.d_t) +
               dot(da.d_xx, db.d_xx) + dot(da.d_tt, db.d_tt) + dot(da.d_xt, db.d_xt);
    return a.grid().h * a.grid().tau * s;
}

/// Fused squared norm plus adjoint: one pass computes h2_norm_sq(f) and
/// accumulates scale * d(h2_norm_sq)/d(f) into grad. The summation order
/// matches h2_norm_sq exactly, so both routes produce the same value bit
/// for bit.
inline double h2_norm_sq_with_gradient(const Field2D& f, double scale, Field2D& grad) {
    const Grid& g = f.grid();
    const int N = g.N, M = g.M;
    const double h = g.h, tau = g.tau;
    const double w = 2.0 * scale * h * tau;
    double s = 0.0;
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= M; ++j) {
            const double v = f.at(i, j);
            s += v * v;
            grad.at(i, j) += w * v;
        }
    for (int j = 0; j <= M; ++j) {
        const double dl = (f.at(1, j) - f.at(0, j)) / h;
        const double dr = (f.at(N, j) - f.at(N - 1, j)) / h;
        s += dl * dl + dr * dr;
        grad.at(1, j) += w * dl / h;
        grad.at(0, j) -= w * dl / h;
        grad.at(N, j) += w * dr / h;
        grad.at(N - 1, j) -= w * dr / h;
    }
    for (int i = 1; i < N; ++i)
        for (int j = 0; j <= M; ++j) {
            const double dx = (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * h);
            const double dxx = (f.at(i - 1, j) - 2.0 * f.at(i, j) + f.at(i + 1, j)) / (h * h);
            s += dx * dx + dxx * dxx;
            const double ax = w * dx / (2.0 * h);
            grad.at(i + 1, j) += ax;
            grad.at(i - 1, j) -= ax;
            const double axx = w * dxx / (h * h);
            grad.at(i - 1, j) += axx;
            grad.at(i, j) -= 2.0 * axx;
            grad.at(i + 1, j) += axx;
        }
    for (int i = 0; i <= N; ++i) {
        const double dl = (f.at(i, 1) - f.at(i, 0)) / tau;
        const double dr = (f.at(i, M) - f.at(i, M - 1)) / tau;
        s += dl * dl + dr * dr;
        grad.at(i, 1) += w * dl / tau;
        grad.at(i, 0) -= w * dl / tau;
        grad.at(i, M) += w * dr / tau;
        grad.at(i, M - 1) -= w * dr / tau;
        for (int j = 1; j < M; ++j) {
            const double dt = (f.at(i, j + 1) - f.at(i, j - 1)) / (2.0 * tau);
            const double dtt = (f.at(i, j - 1) - 2.0 * f.at(i, j) + f.at(i, j + 1)) / (tau * tau);
            s += dt * dt + dtt * dtt;
            const double at = w * dt / (2.0 * tau);
            grad.at(i, j + 1) += at;
            grad.at(i, j - 1) -= at;
            const double att = w * dtt / (tau * tau);
            grad.at(i, j - 1) += att;
            grad.at(i, j) -= 2.0 * att;
            grad.at(i, j + 1) += att;
        }
    }
    for (int i = 1; i < N; ++i)
        for (int j = 1; j < M; ++j) {
            const double dxt = (f.at(i + 1, j + 1) - f.at(i + 1, j - 1) -
                                f.at(i - 1, j + 1) + f.at(i - 1, j - 1)) /
                               (4.0 * h * tau);
            s += dxt * dxt;
            const double axt = w * dxt / (4.0 * h * tau);
            grad.at(i + 1, j + 1) += axt;
            grad.at(i + 1, j - 1) -= axt;
            grad.at(i - 1, j + 1) -= axt;
            grad.at(i - 1, j - 1) += axt;
        }
    return h * tau * s;
}

/// Adjoint of the H2 stencil map: accumulates scale * d(h2_norm_sq)/d(f)
/// into grad. Mirrors the loops of h2_accumulate; the pairing of the two
/// is covered by the gradient finite-difference tests.
inline void h2_gradient_accumulate(const Field2D& f, double scale, Field2D& grad) {
    const Grid& g = f.grid();
    const int N = g.N, M = g.M;
    const double h = g.h, tau = g.tau;
    const double w = 2.0 * scale * g.h * g.tau;
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= M; ++j) grad.at(i, j) += w * f.at(i, j);
    for (int j = 0; j <= M; ++j) {
        const double dl = w * (f.at(1, j) - f.at(0, j)) / (h * h);
        grad.at(1, j) += dl;
        grad.at(0, j) -= dl;
        const double dr = w * (f.at(N, j) - f.at(N - 1, j)) / (h * h);
        grad.at(N, j) += dr;
        grad.at(N - 1, j) -= dr;
        for (int i = 1; i < N; ++i) {
            const double dx = w * (f.at(i + 1, j) - f.at(i - 1, j)) / (4.0 * h * h);
            grad.at(i + 1, j) += dx;
            grad.at(i - 1, j) -= dx;
            const double dxx =
                w * (f.at(i - 1, j) - 2.0 * f.at(i, j) + f.at(i + 1, j)) / (h * h * h * h);
            grad.at(i - 1, j) += dxx;
            grad.at(i, j) -= 2.0 * dxx;
            grad.at(i + 1, j) += dxx;
        }
    }
    for (int i = 0; i <= N; ++i) {
        const double dl = w * (f.at(i, 1) - f.at(i, 0)) / (tau * tau);
        grad.at(i, 1) += dl;
        grad.at(i, 0) -= dl;
        const double dr = w * (f.at(i, M) - f.at(i, M - 1)) / (tau * tau);
        grad.at(i, M) += dr;
        grad.at(i, M - 1) -= dr;
        for (int j = 1; j < M; ++j) {
            const double dt = w * (f.at(i, j + 1) - f.at(i, j - 1)) / (4.0 * tau * tau);
            grad.at(i, j + 1) += dt;
            grad.at(i, j - 1) -= dt;
            const double dtt =
                w * (f.at(i, j - 1) - 2.0 * f.at(i, j) + f.at(i, j + 1)) / (tau * tau * tau * tau);
            grad.at(i, j - 1) += dtt;
            grad.at(i, j) -= 2.0 * dtt;
            grad.at(i, j + 1) += dtt;
        }
    }
    const double cc = 1.0 / (16.0 * h * h * tau * tau);
    for (int i = 1; i < N; ++i)
        for (int j = 1; j < M; ++j) {
            const double dxt = w * cc *
                               (f.at(i + 1, j + 1) - f.at(i + 1, j - 1) -
                                f.at(i - 1, j + 1) + f.at(i - 1, j - 1));
            grad.at(i + 1, j + 1) += dxt;
            grad.at(i + 1, j - 1) -= dxt;
            grad.at(i - 1, j + 1) -= dxt;
            grad.at(i - 1, j - 1) += dxt;
        }
}

}  // namespace carleman
