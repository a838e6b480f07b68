#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "satqb/dynamics.hpp"
#include "satqb/observables.hpp"

namespace satqb {

/// Lindbladian eigenvalues ordered by ascending |Re lambda| (ties by
/// ascending |Im lambda|), with the matching right eigen-operators.
struct LiouvillianSpectrum {
    ComplexVector eigenvalues;
    std::vector<ComplexMatrix> right_ops; // unit Frobenius norm
    double spectral_gap = 0.0;            // |Re lambda_1|
};

struct SteadyStateResult {
    DensityMatrix rho_ss;
    double energy_ss = 0.0;
    double ergotropy_ss = 0.0;
    double residual = 0.0; // ||L rho_ss||_F
    double spectral_gap = 0.0;
};

namespace steadystate {

/// The k eigenvalues of the Liouvillian smallest in |Re lambda|, with
/// reshaped right eigen-operators. Degenerate real parts (conjugate pairs,
/// the closed-system limit) are ordered non-strictly.
inline LiouvillianSpectrum liouvillian_spectrum(const Liouvillian& L, int k) {
    const int N = L.dim();
    const int n2 = N * N;
    if (k < 1 || k > n2) throw ConfigError("liouvillian_spectrum: need 1 <= k <= dim^2");
    const auto eig = linalg::general_eig(L.sup);

    std::vector<int> order(n2);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(eig.eigenvalues(a).real()) < std::abs(eig.eigenvalues(b).real());
    });
    // runs of numerically equal |Re| (conjugate pairs, the closed-system
    // limit) are re-sorted by |Im| so the ordering is deterministic
    double max_re = 0.0;
    for (int i = 0; i < n2; ++i)
        max_re = std::max(max_re, std::abs(eig.eigenvalues(i).real()));
    const double tie_tol = 1e-9 * (1.0 + max_re);
    for (int lo = 0; lo < n2;) {
        int hi = lo + 1;
        while (hi < n2 && std::abs(eig.eigenvalues(order[hi]).real()) -
                                  std::abs(eig.eigenvalues(order[hi - 1]).real()) <
                              tie_tol)
            ++hi;
        std::sort(order.begin() + lo, order.begin() + hi, [&](int a, int b) {
            return std::abs(eig.eigenvalues(a).imag()) < std::abs(eig.eigenvalues(b).imag());
        });
        lo = hi;
    }

    LiouvillianSpectrum out;
    out.eigenvalues.resize(k);
    out.right_ops.reserve(k);
    for (int i = 0; i < k; ++i) {
        const int idx = order[i];
        out.eigenvalues(i) = eig.eigenvalues(idx);
        ComplexMatrix op = dynamics::unvec(eig.eigenvectors.col(idx), N);
        const double nrm = op.norm();
        if (nrm > 0.0) op /= nrm;
        out.right_ops.push_back(std::move(op));
    }
    const double scale = std::max(1.0, L.sup.norm());
    if (std::abs(out.eigenvalues(0)) > 1e-8 * scale)
        throw ConvergenceFailure("liouvillian_spectrum: smallest eigenvalue " +
                                 std::to_string(std::abs(out.eigenvalues(0))) +
                                 " is not numerically zero");
    for (int i = 0; i < k; ++i)
        if (out.eigenvalues(i).real() > 1e-8 * scale)
            throw ConvergenceFailure("liouvillian_spectrum: eigenvalue with positive real part");
    out.spectral_gap =
        k > 1 ? std::abs(out.eigenvalues(1).real())
              : std::abs(eig.eigenvalues(order[1]).real()); // n2 >= 4 always
    return out;
}

/// Unique steady state from the null eigen-operator, rho_ss = rho_0 / tr rho_0.
inline SteadyStateResult steady_state(const Liouvillian& L) {
    if (!(L.gamma > 0.0))
        throw NoRelaxation("steady_state: gamma = 0 gives no relaxation toward a fixed point");
    const auto spec = liouvillian_spectrum(L, 2);
    if (spec.spectral_gap <= 1e-8)
        throw DegenerateSteadyState("steady_state: |Re lambda_1| = " +
                                    std::to_string(spec.spectral_gap) +
                                    " signals a non-unique steady state");
    ComplexMatrix rho0 = spec.right_ops[0];
    const Complex tr = rho0.trace();
    if (std::abs(tr) < 1e-12)
        throw ConvergenceFailure("steady_state: null eigen-operator is traceless");
    rho0 /= tr;
    rho0 = 0.5 * (rho0 + rho0.adjoint()).eval();

    SteadyStateResult out{DensityMatrix{std::move(rho0)}, 0.0, 0.0, 0.0, spec.spectral_gap};
    out.residual = (L.sup * dynamics::vec(out.rho_ss.mat)).norm();
    out.rho_ss.require_valid();
    const ComplexMatrix hB = model::battery_hamiltonian(L.built_from);
    out.energy_ss = observables::energy(out.rho_ss, hB);
    out.ergotropy_ss = observables::ergotropy(out.rho_ss, hB).first;
    return out;
}

/// Cross-check route: solve L x = 0 subject to tr x = 1 by replacing one
/// row with the trace functional.
inline DensityMatrix steady_state_bordered(const Liouvillian& L) {
    if (!(L.gamma > 0.0)) throw NoRelaxation("steady_state_bordered: gamma = 0");
    const int N = L.dim();
    ComplexMatrix M = L.sup;
    M.row(0).setZero();
    for (int n = 0; n < N; ++n) M(0, n * N + n) = 1.0;
    ComplexVector rhs = ComplexVector::Zero(N * N);
    rhs(0) = 1.0;
    const ComplexVector x = linalg::solve(M, rhs);
    ComplexMatrix rho = dynamics::unvec(x, N);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();
    DensityMatrix out{std::move(rho)};
    out.require_valid();
    return out;
}

struct MaxEnergyOptions {
    long coarse_points = 0;    // 0 = auto: ~20 points per unit time
    double refine_dtau = 1e-3; // final bracket width
    dynamics::PropagateOptions prop;
};

struct MaxEnergyResult {
    double tau_star = 0.0;
    double e_max = 0.0;
    bool at_boundary = false; // max found at the scan edge, not an interior peak
};

/// Scan E(tau) over [0, tau_max] on a coarse grid, then refine an interior
/// peak by golden-section search on re-propagated short segments.
inline MaxEnergyResult max_energy(const ModelParams& p, double tau_max,
                                  const MaxEnergyOptions& opts = {}) {
    p.validate();
    if (!(tau_max > 0.0)) throw ConfigError("max_energy: tau_max must be > 0");
    long pts = opts.coarse_points;
    if (pts <= 0) pts = std::clamp(std::lround(20.0 * tau_max) + 1, 101l, 4001l);

    RealVector levels(p.dim);
    for (int n = 0; n < p.dim; ++n) levels(n) = model::battery_level(p, n);
    auto energy_of = [&](const ComplexMatrix& rho) {
        double e = 0.0;
        for (int n = 0; n < p.dim; ++n) e += levels(n) * rho(n, n).real();
        return e;
    };

    const double dt = tau_max / static_cast<double>(pts - 1);
    dynamics::PropagationDiagnostics diag;
    ComplexMatrix rho = DensityMatrix::vacuum(p.dim).mat;
    ComplexMatrix k1;
    bool k1_valid = false;
    auto f = [&p](const ComplexMatrix& x) { return dynamics::lindblad_rhs(p, x); };

    double best_e = energy_of(rho);
    long best_k = 0;
    double bracket_t0 = 0.0;
    ComplexMatrix bracket_state = rho;
    ComplexMatrix prev = rho;
    for (long k = 1; k < pts; ++k) {
        const double t0 = dt * static_cast<double>(k - 1);
        const double t1 = (k == pts - 1) ? tau_max : dt * static_cast<double>(k);
        dynamics::detail::rk45_span(f, rho, t0, t1, opts.prop, diag, k1, k1_valid);
        const double e = energy_of(rho);
        if (e > best_e) {
            best_e = e;
            best_k = k;
            bracket_t0 = t0;
            bracket_state = prev;
        }
        prev = rho;
    }

    if (best_k == 0 || best_k == pts - 1)
        return {best_k == 0 ? 0.0 : tau_max, best_e, true};

    // golden-section on [tau_{k-1}, tau_{k+1}], re-propagating from the
    // stored left-bracket state
    auto eval = [&](double tau) {
        if (tau <= bracket_t0) return energy_of(bracket_state);
        ComplexMatrix r = bracket_state;
        ComplexMatrix kk;
        bool kv = false;
        dynamics::PropagationDiagnostics d;
        dynamics::detail::rk45_span(f, r, bracket_t0, tau, opts.prop, d, kk, kv);
        return energy_of(r);
    };
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = bracket_t0;
    double b = std::min(bracket_t0 + 2.0 * dt, tau_max);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = eval(x1), f2 = eval(x2);
    while (b - a > opts.refine_dtau) {
        if (f1 < f2) { // maximize
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = eval(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = eval(x1);
        }
    }
    const double tau_star = 0.5 * (a + b);
    const double e_star = eval(tau_star);
    if (e_star >= best_e) return {tau_star, e_star, false};
    return {dt * static_cast<double>(best_k), best_e, false};
}

} // namespace steadystate
} // namespace satqb
