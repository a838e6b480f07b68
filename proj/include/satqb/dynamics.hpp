#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "satqb/linalg.hpp"
#include "satqb/model.hpp"

namespace satqb {

/// State of the battery mode on the truncated Fock space.
struct DensityMatrix {
    ComplexMatrix mat;

    int dim() const { return static_cast<int>(mat.rows()); }

    struct Diagnostics {
        double herm_err = 0.0;
        double trace_err = 0.0;
        double min_eig = 0.0;
    };

    Diagnostics diagnostics() const {
        Diagnostics d;
        d.herm_err = (mat - mat.adjoint()).norm();
        d.trace_err = std::abs(mat.trace() - Complex(1.0, 0.0));
        ComplexMatrix sym = 0.5 * (mat + mat.adjoint());
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym, Eigen::EigenvaluesOnly);
        d.min_eig = es.eigenvalues().minCoeff();
        return d;
    }

    void require_valid(double herm_tol = 1e-9, double trace_tol = 1e-9,
                       double psd_tol = 1e-8) const {
        const Diagnostics d = diagnostics();
        if (d.herm_err > herm_tol)
            throw InvariantViolation("DensityMatrix: hermiticity deviation " +
                                     std::to_string(d.herm_err));
        if (d.trace_err > trace_tol)
            throw InvariantViolation("DensityMatrix: trace deviation " +
                                     std::to_string(d.trace_err));
        if (d.min_eig < -psd_tol)
            throw InvariantViolation("DensityMatrix: negative eigenvalue " +
                                     std::to_string(d.min_eig));
    }

    static DensityMatrix from_matrix(ComplexMatrix m) {
        DensityMatrix rho{std::move(m)};
        linalg::require_square(rho.mat, "DensityMatrix");
        rho.require_valid();
        return rho;
    }

    static DensityMatrix fock(int N, int n) {
        if (N < 2) throw DimensionTooSmall("DensityMatrix::fock: need N >= 2");
        if (n < 0 || n >= N) throw DimensionMismatch("DensityMatrix::fock: level outside space");
        ComplexMatrix m = ComplexMatrix::Zero(N, N);
        m(n, n) = 1.0;
        return DensityMatrix{std::move(m)};
    }

    static DensityMatrix vacuum(int N) { return fock(N, 0); }
};

/// Vectorized Lindblad generator. Column-stacking convention throughout:
/// vec(A X B) = (B^T kron A) vec(X).
struct Liouvillian {
    ComplexMatrix sup;      // dim^2 x dim^2
    double gamma = 0.0;
    ModelParams built_from; // parameter snapshot the operator was built from

    int dim() const { return built_from.dim; }
};

/// Time series of charging observables along one trajectory.
struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> energy;
    std::vector<double> ergotropy;
    std::vector<double> trace_err;
    std::vector<double> min_eig;
    std::vector<double> purity;
};

namespace dynamics {

inline ComplexVector vec(const ComplexMatrix& X) {
    return Eigen::Map<const ComplexVector>(X.data(), X.size());
}

inline ComplexMatrix unvec(const ComplexVector& v, int N) {
    if (v.size() != static_cast<Eigen::Index>(N) * N)
        throw DimensionMismatch("unvec: length does not match dim^2");
    return Eigen::Map<const ComplexMatrix>(v.data(), N, N);
}

inline ComplexMatrix kron(const ComplexMatrix& A, const ComplexMatrix& B) {
    ComplexMatrix out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

/// sup = -i (I kron H - H^T kron I)
///       + gamma [ conj(b) kron b - 1/2 I kron n - 1/2 n^T kron I ]
inline Liouvillian build_liouvillian(const ModelParams& p) {
    p.validate();
    const int N = p.dim;
    const ComplexMatrix H = model::rotating_hamiltonian(p);
    const ComplexMatrix b = model::annihilation(N);
    const ComplexMatrix nd = model::number_operator(N);
    const ComplexMatrix I = ComplexMatrix::Identity(N, N);
    const Complex im(0.0, 1.0);
    ComplexMatrix sup = -im * (kron(I, H) - kron(H.transpose(), I));
    sup += p.gamma * (kron(b.conjugate(), b) - 0.5 * kron(I, nd) - 0.5 * kron(nd.transpose(), I));
    return Liouvillian{std::move(sup), p.gamma, p};
}

/// Matrix-form generator exploiting the ladder structure: the commutator
/// with the tridiagonal H and the loss terms cost O(N^2).
inline ComplexMatrix lindblad_rhs(const ModelParams& p, const ComplexMatrix& rho) {
    const int N = static_cast<int>(rho.rows());
    if (rho.cols() != N) throw DimensionMismatch("lindblad_rhs: rho must be square");
    if (N != p.dim) throw DimensionMismatch("lindblad_rhs: rho dim != params dim");
    ComplexMatrix out(N, N);
    const Complex im(0.0, 1.0);
    for (int m = 0; m < N; ++m) {
        const double dm = model::rotating_level(p, m);
        const double sm = std::sqrt(static_cast<double>(m));
        const double sm1 = std::sqrt(static_cast<double>(m + 1));
        for (int n = 0; n < N; ++n) {
            const double dn = model::rotating_level(p, n);
            Complex c = (dm - dn) * rho(m, n);
            if (m + 1 < N) c += p.alpha * sm1 * rho(m + 1, n);
            if (m > 0) c += p.alpha * sm * rho(m - 1, n);
            if (n + 1 < N) c -= p.alpha * std::sqrt(static_cast<double>(n + 1)) * rho(m, n + 1);
            if (n > 0) c -= p.alpha * std::sqrt(static_cast<double>(n)) * rho(m, n - 1);
            Complex d = -0.5 * static_cast<double>(m + n) * rho(m, n);
            if (m + 1 < N && n + 1 < N)
                d += sm1 * std::sqrt(static_cast<double>(n + 1)) * rho(m + 1, n + 1);
            out(m, n) = -im * c + p.gamma * d;
        }
    }
    return out;
}

/// d(rho)/dt in matrix form. Hermitian and traceless for Hermitian input.
inline ComplexMatrix apply_lindbladian(const Liouvillian& L, const DensityMatrix& rho) {
    if (rho.dim() != L.dim()) throw DimensionMismatch("apply_lindbladian: dim mismatch");
    return lindblad_rhs(L.built_from, rho.mat);
}

/// Same map through the vectorized superoperator; kept as an independent
/// route for cross-checks.
inline ComplexMatrix apply_superop(const Liouvillian& L, const ComplexMatrix& rho) {
    const int N = L.dim();
    if (rho.rows() != N || rho.cols() != N)
        throw DimensionMismatch("apply_superop: dim mismatch");
    return unvec(L.sup * vec(rho), N);
}

enum class Propagator { RK45, Expm };

struct PropagateOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    Propagator mode = Propagator::RK45;
    double trace_drift_limit = 1e-6;
    long max_steps = 50'000'000;
    linalg::ExpmOptions expm; // used by the Expm mode
};

struct PropagationDiagnostics {
    double max_trace_drift = 0.0; // raw per-step |tr rho - 1| before renormalization
    long steps_accepted = 0;
    long steps_rejected = 0;
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
struct DP45 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // b - b*, for the embedded fourth-order error estimate
    static constexpr double d1 = 71.0 / 57600, d3 = -71.0 / 16695, d4 = 71.0 / 1920,
                            d5 = -17253.0 / 339200, d6 = 22.0 / 525, d7 = -1.0 / 40;
};

inline double error_norm(const ComplexMatrix& err, const ComplexMatrix& y0,
                         const ComplexMatrix& y1, double atol, double rtol) {
    double acc = 0.0;
    const auto n = err.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sc =
            atol + rtol * std::max(std::abs(y0.data()[i]), std::abs(y1.data()[i]));
        const double e = std::abs(err.data()[i]) / sc;
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

// Integrate rho' = f(rho) across [t0, t1], mutating rho in place.
template <typename RHS>
void rk45_span(RHS&& f, ComplexMatrix& rho, double t0, double t1,
               const PropagateOptions& opts, PropagationDiagnostics& diag,
               ComplexMatrix& k1, bool& k1_valid) {
    if (t1 <= t0) return;
    using T = DP45;
    double t = t0;
    double h = std::min(t1 - t0, 0.1);
    const double h_floor = 1e-14 * std::max(1.0, t1);
    while (t < t1) {
        if (diag.steps_accepted + diag.steps_rejected > opts.max_steps)
            throw ConvergenceFailure("propagate: step budget exhausted");
        h = std::min(h, t1 - t);
        if (!k1_valid) {
            k1 = f(rho);
            k1_valid = true;
        }
        ComplexMatrix k2 = f(rho + h * T::a21 * k1);
        ComplexMatrix k3 = f(rho + h * (T::a31 * k1 + T::a32 * k2));
        ComplexMatrix k4 = f(rho + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
        ComplexMatrix k5 = f(rho + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
        ComplexMatrix k6 = f(rho + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 +
                                        T::a64 * k4 + T::a65 * k5));
        ComplexMatrix ynew = rho + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 +
                                        T::b5 * k5 + T::b6 * k6);
        ComplexMatrix k7 = f(ynew); // FSAL
        ComplexMatrix err = h * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 + T::d5 * k5 +
                                 T::d6 * k6 + T::d7 * k7);
        const double en = error_norm(err, rho, ynew, opts.atol, opts.rtol);
        if (en <= 1.0) {
            t += h;
            rho = std::move(ynew);
            k1 = std::move(k7);
            ++diag.steps_accepted;
            // project back onto the Hermitian, unit-trace manifold
            rho = 0.5 * (rho + rho.adjoint()).eval();
            const double tr = rho.trace().real();
            const double drift = std::abs(tr - 1.0);
            diag.max_trace_drift = std::max(diag.max_trace_drift, drift);
            if (drift > opts.trace_drift_limit)
                throw InvariantViolation("propagate: trace drifted by " + std::to_string(drift));
            if (drift > 1e-12) {
                rho /= tr;
                k1_valid = false;
            }
        } else {
            ++diag.steps_rejected;
        }
        const double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
        h *= std::clamp(fac, 0.2, 5.0);
        if (h < h_floor && t < t1)
            throw StepSizeUnderflow("propagate: step size underflow at t = " + std::to_string(t));
    }
}

} // namespace detail

inline void check_tau_grid(const std::vector<double>& tau_grid) {
    if (tau_grid.empty()) throw ConfigError("propagate: empty tau grid");
    if (tau_grid.front() < 0.0) throw ConfigError("propagate: tau grid must start >= 0");
    for (std::size_t i = 1; i < tau_grid.size(); ++i)
        if (tau_grid[i] <= tau_grid[i - 1])
            throw ConfigError("propagate: tau grid must be strictly increasing");
}

/// Propagate rho0 through the Lindblad flow defined by params, returning
/// the state at every grid point. Does not materialize the superoperator,
/// so it scales to large truncations.
inline std::vector<DensityMatrix> propagate_params(const ModelParams& p,
                                                   const DensityMatrix& rho0,
                                                   const std::vector<double>& tau_grid,
                                                   const PropagateOptions& opts = {},
                                                   PropagationDiagnostics* diag_out = nullptr) {
    p.validate();
    check_tau_grid(tau_grid);
    if (rho0.dim() != p.dim) throw DimensionMismatch("propagate: rho0 dim != params dim");
    rho0.require_valid();

    std::vector<DensityMatrix> out;
    out.reserve(tau_grid.size());
    PropagationDiagnostics diag;
    ComplexMatrix rho = rho0.mat;
    auto f = [&p](const ComplexMatrix& x) { return lindblad_rhs(p, x); };
    ComplexMatrix k1;
    bool k1_valid = false;
    double t = 0.0;
    for (double tau : tau_grid) {
        detail::rk45_span(f, rho, t, tau, opts, diag, k1, k1_valid);
        t = tau;
        out.push_back(DensityMatrix{rho});
    }
    if (diag_out) *diag_out = diag;
    return out;
}

/// Exact-propagator route: w(tau) = exp(tau * sup) vec(rho0) via Krylov or
/// dense exponential. Cross-validates the RK integrator.
inline std::vector<DensityMatrix> propagate_expm(const Liouvillian& L,
                                                 const DensityMatrix& rho0,
                                                 const std::vector<double>& tau_grid,
                                                 const linalg::ExpmOptions& opts = {}) {
    check_tau_grid(tau_grid);
    if (rho0.dim() != L.dim()) throw DimensionMismatch("propagate: rho0 dim != L dim");
    std::vector<DensityMatrix> out;
    out.reserve(tau_grid.size());
    ComplexVector w = vec(rho0.mat);
    double t = 0.0;
    for (double tau : tau_grid) {
        if (tau > t) w = linalg::expm_apply(L.sup, w, tau - t, opts);
        t = tau;
        ComplexMatrix m = unvec(w, L.dim());
        m = 0.5 * (m + m.adjoint()).eval();
        const double tr = m.trace().real();
        if (std::abs(tr - 1.0) > 1e-12) m /= tr;
        out.push_back(DensityMatrix{std::move(m)});
    }
    return out;
}

inline std::vector<DensityMatrix> propagate(const Liouvillian& L, const DensityMatrix& rho0,
                                            const std::vector<double>& tau_grid,
                                            const PropagateOptions& opts = {},
                                            PropagationDiagnostics* diag_out = nullptr) {
    if (opts.mode == Propagator::Expm) return propagate_expm(L, rho0, tau_grid, opts.expm);
    return propagate_params(L.built_from, rho0, tau_grid, opts, diag_out);
}

/// Closed-form first derivative of the vacuum under the generator: the
/// drive creates the |0><1| coherence, i alpha (|0><1| - |1><0|).
/// Valid only for rho(0) = |0><0|.
inline ComplexMatrix vacuum_first_order(const ModelParams& p) {
    ComplexMatrix T = ComplexMatrix::Zero(p.dim, p.dim);
    T(0, 1) = Complex(0.0, p.alpha);
    T(1, 0) = Complex(0.0, -p.alpha);
    return T;
}

/// Closed-form second derivative of the vacuum: populations, the |0><2|
/// coherence, and damped/detuned |0><1| terms where the nonlinearity first
/// enters through chi/(1 + n_s). Valid only for rho(0) = |0><0|.
inline ComplexMatrix vacuum_second_order(const ModelParams& p) {
    if (p.dim < 3)
        throw DimensionTooSmall("vacuum_second_order: the |0><2| coherence needs dim >= 3");
    const double a = p.alpha;
    const double d1 = p.detuning + p.chi / (1.0 + p.n_s);
    ComplexMatrix T = ComplexMatrix::Zero(p.dim, p.dim);
    T(1, 1) = 2.0 * a * a;
    T(0, 0) = -2.0 * a * a; // tracelessness of the generator fixes this weight
    T(0, 2) = -a * a * std::sqrt(2.0);
    T(2, 0) = -a * a * std::sqrt(2.0);
    const Complex ia(0.0, a);
    T(0, 1) = ia * (Complex(0.0, d1) - 0.5 * p.gamma);
    T(1, 0) = ia * (Complex(0.0, d1) + 0.5 * p.gamma);
    return T;
}

/// L^n rho(0) by repeated application of the generator.
inline ComplexMatrix taylor_term(const Liouvillian& L, const DensityMatrix& rho0, int n) {
    if (n < 0) throw ConfigError("taylor_term: order must be >= 0");
    if (rho0.dim() != L.dim()) throw DimensionMismatch("taylor_term: dim mismatch");
    ComplexMatrix term = rho0.mat;
    for (int k = 0; k < n; ++k) term = lindblad_rhs(L.built_from, term);
    return term;
}

/// Frobenius distance between the propagated state and the truncated
/// Taylor series sum_{n<=order} tau^n/n! L^n rho(0). Meaningful while
/// ||tau L|| < 1; used to confirm O(tau^{order+1}) scaling.
inline double short_time_check(const Liouvillian& L, const DensityMatrix& rho0, int order,
                               double tau) {
    if (order < 0) throw ConfigError("short_time_check: order must be >= 0");
    if (tau == 0.0) {
        return 0.0; // series and propagation both reduce to rho(0)
    }
    ComplexMatrix series = ComplexMatrix::Zero(L.dim(), L.dim());
    ComplexMatrix term = rho0.mat;
    double coeff = 1.0;
    for (int n = 0; n <= order; ++n) {
        if (n > 0) {
            term = lindblad_rhs(L.built_from, term);
            coeff *= tau / static_cast<double>(n);
        }
        series += coeff * term;
    }
    PropagateOptions opts;
    opts.rtol = 1e-12;
    opts.atol = 1e-14;
    auto states = propagate_params(L.built_from, rho0, {tau}, opts);
    return (states.back().mat - series).norm();
}

} // namespace dynamics
} // namespace satqb
