#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "carleman/grid.hpp"

namespace carleman {

/// Carleman weight families. The quadratic families exponentiate psi
/// directly, the inverse-power families exponentiate psi^(-nu) and need
/// psi > 0 at every evaluated point.
enum class CwfFamily {
    GenericExp,           // phi = exp(lambda * psi(x, t)), user-supplied psi
    EllipticInvPower,     // psi = x1 + |x~|^2/X^2 + rho,           phi = exp(lambda * psi^-nu)
    ParabolicInvPower,    // psi = x1 + |x~|^2/X^2 + t^2/T^2 + rho, phi = exp(lambda * psi^-nu)
    ParabolicQuadratic,   // phi = exp(lambda * (|x|^2 - t^2))
    HyperbolicQuadratic,  // psi = |x - x0|^2 - eta t^2,            phi = exp(lambda * psi)
};

struct CwfSpec {
    CwfFamily family = CwfFamily::ParabolicQuadratic;
    double lambda = 0.0;
    double nu = 2.0;      // inverse-power families; only existence of a large
                          // enough nu is known, 2 is a default, not derived
    double rho = 0.25;    // inverse-power families, must lie in (0, 1/2)
    double X = 1.0;
    double T = 1.0;
    std::vector<double> x0;  // hyperbolic family center
    double eta = 0.5;        // hyperbolic family, must lie in (0, 1)
    std::function<double(const std::vector<double>&, double)> psi;  // GenericExp only

    void validate() const {
        if (lambda < 0.0) throw std::invalid_argument("CwfSpec: lambda must be >= 0");
        switch (family) {
            case CwfFamily::GenericExp:
                if (!psi) throw std::invalid_argument("CwfSpec: GenericExp needs a psi function");
                break;
            case CwfFamily::EllipticInvPower:
            case CwfFamily::ParabolicInvPower:
                if (nu <= 1.0) throw std::invalid_argument("CwfSpec: nu must be > 1");
                if (rho <= 0.0 || rho >= 0.5)
                    throw std::invalid_argument("CwfSpec: rho must lie in (0, 1/2)");
                if (X <= 0.0 || T <= 0.0)
                    throw std::invalid_argument("CwfSpec: X and T must be positive");
                break;
            case CwfFamily::ParabolicQuadratic:
                break;
            case CwfFamily::HyperbolicQuadratic:
                if (eta <= 0.0 || eta >= 1.0)
                    throw std::invalid_argument("CwfSpec: eta must lie in (0, 1)");
                break;
        }
    }
};

/// Level function psi of the selected family at a point.
inline double cwf_psi(const CwfSpec& spec, const std::vector<double>& x, double t) {
    auto sq = [](double v) { return v * v; };
    switch (spec.family) {
        case CwfFamily::GenericExp:
            return spec.psi(x, t);
        case CwfFamily::EllipticInvPower: {
            double s = x.at(0) + spec.rho;
            for (std::size_t k = 1; k < x.size(); ++k) s += sq(x[k]) / sq(spec.X);
            return s;
        }
        case CwfFamily::ParabolicInvPower: {
            double s = x.at(0) + spec.rho + sq(t) / sq(spec.T);
            for (std::size_t k = 1; k < x.size(); ++k) s += sq(x[k]) / sq(spec.X);
            return s;
        }
        case CwfFamily::ParabolicQuadratic: {
            double s = -sq(t);
            for (double xi : x) s += sq(xi);
            return s;
        }
        case CwfFamily::HyperbolicQuadratic: {
            double s = -spec.eta * sq(t);
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double c = k < spec.x0.size() ? spec.x0[k] : 0.0;
                s += sq(x[k] - c);
            }
            return s;
        }
    }
    return 0.0;
}

/// Weight value phi_lambda(x, t); strictly positive.
inline double cwf_value(const CwfSpec& spec, const std::vector<double>& x, double t) {
    spec.validate();
    const double psi = cwf_psi(spec, x, t);
    switch (spec.family) {
        case CwfFamily::EllipticInvPower:
        case CwfFamily::ParabolicInvPower:
            if (psi <= 0.0)
                throw std::domain_error("cwf_value: psi <= 0 for an inverse-power family");
            return std::exp(spec.lambda * std::pow(psi, -spec.nu));
        default:
            return std::exp(spec.lambda * psi);
    }
}

inline double cwf_value(const CwfSpec& spec, double x, double t) {
    return cwf_value(spec, std::vector<double>{x}, t);
}

/// Nodal squared weight phi_lambda^2(x_i, t_j) over a 1-D space grid.
inline Field2D cwf_weight_grid(const CwfSpec& spec, const Grid& grid) {
    spec.validate();
    Field2D w(grid);
    std::vector<double> pt(1);
    for (int i = 0; i <= grid.N; ++i) {
        pt[0] = grid.x(i);
        for (int j = 0; j <= grid.M; ++j) {
            const double phi = cwf_value(spec, pt, grid.t(j));
            w.at(i, j) = phi * phi;
        }
    }
    return w;
}

/// Noise-driven weight parameter lambda(delta) = ln(delta^(-1/(2m))).
inline double lambda_for_noise(double delta, double m) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("lambda_for_noise: delta must lie in (0, 1)");
    if (m <= 0.0) throw std::invalid_argument("lambda_for_noise: m must be positive");
    return -std::log(delta) / (2.0 * m);
}

/// Convergence-rate exponent theta = min(epsilon/(4m), 1/2).
inline double rate_exponent(double epsilon, double m) {
    if (m <= 0.0) throw std::invalid_argument("rate_exponent: m must be positive");
    return std::min(epsilon / (4.0 * m), 0.5);
}

/// Optional balancing prefactor exp(-2 lambda (alpha + epsilon)) for the
/// weighted residual term. The benchmark experiments leave it off.
inline double balance_prefactor(double lambda, double alpha, double epsilon) {
    return std::exp(-2.0 * lambda * (alpha + epsilon));
}

}  // namespace carleman
