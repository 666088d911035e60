#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace ionchain {

/// Dimensionless axial equilibrium positions u_i of an N-ion chain, sorted
/// ascending. Positions do not depend on the ion masses.
struct EquilibriumPositions {
    std::vector<double> u;

    std::size_t size() const noexcept { return u.size(); }
    double operator[](std::size_t i) const { return u[i]; }
};

struct EquilibriumOptions {
    double tolerance = 1e-12;  ///< max-norm of the potential gradient
    int max_iterations = 200;
    int max_halvings = 60;
};

namespace detail {

inline void require_sorted(const std::vector<double>& u) {
    for (std::size_t i = 1; i < u.size(); ++i)
        if (!(u[i] > u[i - 1])) throw std::invalid_argument("positions must be strictly increasing");
}

inline bool strictly_increasing(const Eigen::VectorXd& u) {
    for (Eigen::Index i = 1; i < u.size(); ++i)
        if (!(u[i] > u[i - 1])) return false;
    return true;
}

}  // namespace detail

/// V(u) = sum_i u_i^2/2 + sum_{i<j} 1/|u_i - u_j| for an ordered chain.
inline double potential_energy(const std::vector<double>& u) {
    double v = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        v += 0.5 * u[i] * u[i];
        for (std::size_t j = i + 1; j < u.size(); ++j) v += 1.0 / std::abs(u[i] - u[j]);
    }
    return v;
}

/// g_i = u_i - sum_{p<i} (u_i-u_p)^-2 + sum_{p>i} (u_i-u_p)^-2. Assumes u sorted.
inline Eigen::VectorXd potential_gradient(const Eigen::VectorXd& u) {
    const Eigen::Index n = u.size();
    Eigen::VectorXd g = u;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index p = 0; p < n; ++p) {
            if (p == i) continue;
            const double d = u[i] - u[p];
            g[i] += (p < i ? -1.0 : 1.0) / (d * d);
        }
    }
    return g;
}

inline Eigen::MatrixXd potential_hessian(const Eigen::VectorXd& u) {
    const Eigen::Index n = u.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index p = 0; p < n; ++p) {
            if (p == i) continue;
            const double c = 2.0 / std::pow(std::abs(u[i] - u[p]), 3);
            h(i, i) += c;
            h(i, p) -= c;
        }
    }
    return h;
}

inline double gradient_residual(const std::vector<double>& u) {
    const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
    return potential_gradient(v).lpNorm<Eigen::Infinity>();
}

/// Seed used by the Newton solver: equispaced, spread 2 N^-0.44.
inline Eigen::VectorXd equilibrium_seed(std::size_t n_ions) {
    const double n = static_cast<double>(n_ions);
    const double spacing = 2.0 * std::pow(n, -0.44);
    Eigen::VectorXd u(static_cast<Eigen::Index>(n_ions));
    for (std::size_t i = 0; i < n_ions; ++i) u[static_cast<Eigen::Index>(i)] = (static_cast<double>(i + 1) - 0.5 * (n + 1.0)) * spacing;
    return u;
}

/// Solves the axial force balance by damped Newton on the potential gradient.
/// Steps are halved until the residual decreases and the ordering survives.
inline EquilibriumPositions solve_equilibrium(std::size_t n_ions, const EquilibriumOptions& options = {}) {
    if (n_ions < 2) throw std::invalid_argument("solve_equilibrium: n_ions must be >= 2");

    Eigen::VectorXd u = equilibrium_seed(n_ions);
    Eigen::VectorXd g = potential_gradient(u);
    double residual = g.lpNorm<Eigen::Infinity>();

    for (int iter = 0; iter < options.max_iterations && residual > options.tolerance; ++iter) {
        const Eigen::VectorXd step = potential_hessian(u).ldlt().solve(g);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
            const Eigen::VectorXd trial = u - t * step;
            if (!detail::strictly_increasing(trial)) continue;
            const Eigen::VectorXd g_trial = potential_gradient(trial);
            const double r_trial = g_trial.lpNorm<Eigen::Infinity>();
            if (r_trial < residual) {
                u = trial;
                g = g_trial;
                residual = r_trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }

    // u_i = -u_{N+1-i} holds exactly for the true minimum
    const Eigen::Index n = u.size();
    Eigen::VectorXd sym(n);
    for (Eigen::Index i = 0; i < n; ++i) sym[i] = 0.5 * (u[i] - u[n - 1 - i]);
    const double sym_residual = potential_gradient(sym).lpNorm<Eigen::Infinity>();
    if (sym_residual > options.tolerance)
        throw ConvergenceError("solve_equilibrium: no convergence for N=" + std::to_string(n_ions),
                               std::max(residual, sym_residual));

    return EquilibriumPositions{std::vector<double>(sym.data(), sym.data() + n)};
}

}  // namespace ionchain
