#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <lapacke.h>

#include <complex>
#include <string>
#include <vector>

#include "satqb/errors.hpp"

namespace satqb {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

namespace linalg {

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascending,
/// eigenvector columns orthonormal.
struct HermitianEigenResult {
    RealVector eigenvalues;
    ComplexMatrix eigenvectors;
};

/// Eigendecomposition of a general complex matrix. No ordering guaranteed.
struct GeneralEigenResult {
    ComplexVector eigenvalues;
    ComplexMatrix eigenvectors; // right eigenvectors as columns, unit 2-norm
};

inline void require_square(const ComplexMatrix& A, const char* who) {
    if (A.rows() != A.cols() || A.rows() < 1)
        throw DimensionMismatch(std::string(who) + ": matrix must be square, got " +
                                std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
    if (!A.allFinite())
        throw InvariantViolation(std::string(who) + ": matrix has non-finite entries");
}

inline HermitianEigenResult hermitian_eig(const ComplexMatrix& A, double herm_tol = 1e-9) {
    require_square(A, "hermitian_eig");
    const double scale = A.norm();
    const double dev = (A - A.adjoint()).norm();
    if (dev > herm_tol * std::max(scale, 1e-300))
        throw NonHermitianInput("hermitian_eig: ||A - A^dag|| = " + std::to_string(dev) +
                                " exceeds " + std::to_string(herm_tol) + " * ||A||");
    // symmetrize to absorb floating-point drift before decomposing
    ComplexMatrix S = 0.5 * (A + A.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(S);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("hermitian_eig: iteration failed to converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// General (non-Hermitian) eigendecomposition, delegated to LAPACK zgeev.
inline GeneralEigenResult general_eig(const ComplexMatrix& A) {
    require_square(A, "general_eig");
    const int n = static_cast<int>(A.rows());
    ComplexMatrix work = A; // zgeev overwrites its input
    GeneralEigenResult out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    const int info = LAPACKE_zgeev(
        LAPACK_COL_MAJOR, 'N', 'V', n,
        reinterpret_cast<lapack_complex_double*>(work.data()), n,
        reinterpret_cast<lapack_complex_double*>(out.eigenvalues.data()), nullptr, n,
        reinterpret_cast<lapack_complex_double*>(out.eigenvectors.data()), n);
    if (info != 0)
        throw ConvergenceFailure("general_eig: zgeev returned info=" + std::to_string(info));
    return out;
}

/// Solve A x = rhs by partial-pivoting LU. Large systems go through the
/// LAPACK kernel; both paths share the pivot and residual contracts.
inline ComplexVector solve(const ComplexMatrix& A, const ComplexVector& rhs,
                           double rank_tol = 1e-14) {
    require_square(A, "solve");
    if (rhs.size() != A.rows())
        throw DimensionMismatch("solve: rhs length " + std::to_string(rhs.size()) +
                                " != dim " + std::to_string(A.rows()));
    const int n = static_cast<int>(A.rows());
    ComplexVector x;
    double umin = std::numeric_limits<double>::infinity(), umax = 0.0;
    if (n >= 512) {
        ComplexMatrix lu = A;
        x = rhs;
        std::vector<lapack_int> ipiv(n);
        const int info = LAPACKE_zgesv(LAPACK_COL_MAJOR, n, 1,
                                       reinterpret_cast<lapack_complex_double*>(lu.data()), n,
                                       ipiv.data(),
                                       reinterpret_cast<lapack_complex_double*>(x.data()), n);
        if (info > 0) throw SingularMatrix("solve: zero pivot at position " + std::to_string(info));
        if (info < 0) throw Error("solve: zgesv illegal argument " + std::to_string(-info));
        for (int i = 0; i < n; ++i) {
            const double d = std::abs(lu(i, i));
            umin = std::min(umin, d);
            umax = std::max(umax, d);
        }
    } else {
        Eigen::PartialPivLU<ComplexMatrix> plu(A);
        const auto& U = plu.matrixLU();
        for (Eigen::Index i = 0; i < U.rows(); ++i) {
            const double d = std::abs(U(i, i));
            umin = std::min(umin, d);
            umax = std::max(umax, d);
        }
        x = plu.solve(rhs);
    }
    if (umax == 0.0 || umin <= rank_tol * umax)
        throw SingularMatrix("solve: pivot ratio " + std::to_string(umin / std::max(umax, 1e-300)) +
                             " signals rank deficiency");
    const double resid = (A * x - rhs).norm();
    const double bound = 1e-10 * (A.norm() * x.norm() + rhs.norm());
    if (resid > std::max(bound, 1e-300))
        throw SingularMatrix("solve: residual " + std::to_string(resid) +
                             " exceeds bound; matrix is numerically singular");
    return x;
}

/// Dense matrix exponential (scaling-and-squaring Pade, via Eigen).
inline ComplexMatrix expm(const ComplexMatrix& A) {
    require_square(A, "expm");
    return A.exp();
}

struct ExpmOptions {
    double tol = 1e-12;       // local error target per unit propagation
    int krylov_dim = 40;      // Arnoldi subspace size for the large-dim path
    int dense_threshold = 128; // below this dim, exponentiate densely
    double norm_safety = 1e4; // refuse ||tA||_1 beyond this
    int max_substeps = 100000;
};

namespace detail {

// One adaptive Krylov (Arnoldi) pass: w <- exp(tA) w.
inline void krylov_expm_inplace(const ComplexMatrix& A, ComplexVector& w, double t,
                                const ExpmOptions& opts) {
    const int n = static_cast<int>(A.rows());
    const int m = std::min(opts.krylov_dim, n);
    const double anorm = A.cwiseAbs().colwise().sum().maxCoeff(); // 1-norm
    double t_done = 0.0;
    double dt = std::min(t, anorm > 0 ? 0.5 * m / anorm : t);
    int substeps = 0;
    while (t_done < t) {
        if (++substeps > opts.max_substeps)
            throw ConvergenceFailure("expm_apply: substep budget exhausted");
        const double beta = w.norm();
        if (beta == 0.0) return;
        ComplexMatrix V(n, m + 1);
        ComplexMatrix H = ComplexMatrix::Zero(m + 2, m + 1);
        V.col(0) = w / beta;
        int built = m;
        bool happy = false;
        for (int j = 0; j < m; ++j) {
            ComplexVector p = A * V.col(j);
            for (int i = 0; i <= j; ++i) { // modified Gram-Schmidt
                const Complex hij = V.col(i).dot(p);
                H(i, j) = hij;
                p -= hij * V.col(i);
            }
            const double hnext = p.norm();
            H(j + 1, j) = hnext;
            if (hnext <= 1e-14 * std::max(anorm, 1.0)) { // invariant subspace
                built = j + 1;
                happy = true;
                break;
            }
            V.col(j + 1) = p / hnext;
        }
        if (happy) {
            const double dt_rem = t - t_done;
            ComplexMatrix F = expm(dt_rem * H.topLeftCorner(built, built));
            w = beta * (V.leftCols(built) * F.col(0));
            return;
        }
        dt = std::min(dt, t - t_done);
        for (;;) {
            // augmented Hessenberg: last row integrates the residual term,
            // giving both the local error estimate and a free correction
            ComplexMatrix Haug = ComplexMatrix::Zero(m + 1, m + 1);
            Haug.topLeftCorner(m, m) = H.topLeftCorner(m, m);
            Haug(m, m - 1) = H(m, m - 1);
            ComplexMatrix F = expm(dt * Haug);
            const double err = beta * std::abs(F(m, 0));
            const double budget = opts.tol * std::max(dt / t, 1e-3);
            if (err <= budget * std::max(beta, 1.0) || dt <= 1e-14 * t) {
                w = beta * (V.leftCols(m) * F.col(0).head(m));
                w += beta * F(m, 0) * V.col(m);
                t_done += dt;
                if (err < 0.1 * budget * std::max(beta, 1.0)) dt *= 1.5;
                break;
            }
            dt *= 0.5;
        }
    }
}

} // namespace detail

/// Returns exp(t A) v. Dense scaling-and-squaring for small matrices,
/// adaptive Krylov otherwise. Documented range: ||tA||_1 <= norm_safety.
inline ComplexVector expm_apply(const ComplexMatrix& A, const ComplexVector& v, double t,
                                const ExpmOptions& opts = {}) {
    require_square(A, "expm_apply");
    if (v.size() != A.rows())
        throw DimensionMismatch("expm_apply: vector length mismatch");
    if (t < 0.0) throw Error("expm_apply: t must be >= 0");
    if (t == 0.0) return v;
    const double anorm = A.cwiseAbs().colwise().sum().maxCoeff();
    if (anorm * t > opts.norm_safety)
        throw OverflowRisk("expm_apply: ||tA||_1 = " + std::to_string(anorm * t) +
                           " exceeds safety bound " + std::to_string(opts.norm_safety));
    if (A.rows() <= opts.dense_threshold) return expm(t * A) * v;
    ComplexVector w = v;
    detail::krylov_expm_inplace(A, w, t, opts);
    return w;
}

} // namespace linalg
} // namespace satqb
