#pragma once

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "satqb/dynamics.hpp"
#include "satqb/linalg.hpp"
#include "satqb/model.hpp"

namespace satqb {

/// Eigenvalues of rho paired against the battery levels in passive order:
/// probabilities descending, levels ascending.
struct PassiveDecomposition {
    RealVector probs;  // descending, clipped and renormalized
    RealVector levels; // ascending
    double passive_energy = 0.0;
};

struct WignerGridSpec {
    double re_min = -4.0, re_max = 4.0;
    double im_min = -4.0, im_max = 4.0;
    int re_points = 101, im_points = 101;

    void validate() const {
        if (!(std::isfinite(re_min) && std::isfinite(re_max) && std::isfinite(im_min) &&
              std::isfinite(im_max)))
            throw ConfigError("WignerGridSpec: non-finite bounds");
        if (re_points < 1 || im_points < 1) throw ConfigError("WignerGridSpec: need >= 1 point");
        if (re_max < re_min || im_max < im_min) throw ConfigError("WignerGridSpec: empty range");
    }
};

struct WignerGrid {
    RealVector re_beta;
    RealVector im_beta;
    RealMatrix values; // values(i, j) = W(re_beta[i] + i*im_beta[j])

    double min_value() const { return values.minCoeff(); }

    /// Riemann mass sum(W) * dA; ~1 when the grid encloses the support.
    double grid_mass() const {
        if (re_beta.size() < 2 || im_beta.size() < 2) return 0.0;
        const double dA = (re_beta(1) - re_beta(0)) * (im_beta(1) - im_beta(0));
        return values.sum() * dA;
    }
};

namespace observables {

/// E = tr[h_B rho].
inline double energy(const DensityMatrix& rho, const ComplexMatrix& hB) {
    if (hB.rows() != rho.dim() || hB.cols() != rho.dim())
        throw DimensionMismatch("energy: operator dim mismatch");
    const Complex tr = (hB * rho.mat).trace();
    if (std::abs(tr.imag()) > 1e-10)
        throw InvariantViolation("energy: trace has imaginary residue " +
                                 std::to_string(tr.imag()));
    return tr.real();
}

/// Passive pairing against a precomputed ascending level list. Ties in the
/// probabilities cannot change the result: equal probs multiply the same
/// reordered level sums. Eigenvalues of rho down to -1e-8 are clipped to
/// zero and the vector renormalized; anything lower is an error.
inline PassiveDecomposition passive_decomposition(const DensityMatrix& rho,
                                                  const RealVector& levels_ascending) {
    const int N = rho.dim();
    if (levels_ascending.size() != N)
        throw DimensionMismatch("ergotropy: level count mismatch");

    const auto res = linalg::hermitian_eig(rho.mat);
    std::vector<double> probs(res.eigenvalues.data(), res.eigenvalues.data() + N);
    double sum = 0.0;
    for (double& p : probs) {
        if (p < -1e-8)
            throw InvariantViolation("ergotropy: state eigenvalue " + std::to_string(p) +
                                     " below tolerance");
        if (p < 0.0) p = 0.0;
        sum += p;
    }
    if (sum <= 0.0) throw InvariantViolation("ergotropy: state has zero total weight");
    for (double& p : probs) p /= sum;
    std::stable_sort(probs.begin(), probs.end(), std::greater<double>());

    PassiveDecomposition pd;
    pd.probs = Eigen::Map<const RealVector>(probs.data(), N);
    pd.levels = levels_ascending;
    double passive = 0.0;
    for (int n = 0; n < N; ++n) passive += probs[n] * levels_ascending(n);
    pd.passive_energy = passive;
    return pd;
}

/// Ergotropy = tr[h_B rho] - tr[h_B sigma], sigma the passive state.
inline std::pair<double, PassiveDecomposition> ergotropy(const DensityMatrix& rho,
                                                         const ComplexMatrix& hB) {
    if (hB.rows() != rho.dim() || hB.cols() != rho.dim())
        throw DimensionMismatch("ergotropy: operator dim mismatch");
    const auto hres = linalg::hermitian_eig(hB);
    const PassiveDecomposition pd = passive_decomposition(rho, hres.eigenvalues);
    const double e = energy(rho, hB);
    return {e - pd.passive_energy, pd};
}

/// Displaced-parity Wigner evaluator. The Hermitian generator
/// X = i(b^dag - b) is diagonalized once, after which the displacement
/// D(r) = exp(-i r X) costs two matrix products per distinct radius and
/// the angular part is a diagonal phase rotation. Reusable across
/// snapshots at the same truncation; the radius cache carries over.
class WignerEvaluator {
public:
    explicit WignerEvaluator(int N) {
        const ComplexMatrix b = model::annihilation(N);
        const Complex im(0.0, 1.0);
        ComplexMatrix X = im * (b.adjoint() - b);
        auto res = linalg::hermitian_eig(X);
        lambda_ = std::move(res.eigenvalues);
        V_ = std::move(res.eigenvectors);
        ComplexMatrix PV = V_;
        for (int n = 1; n < V_.rows(); n += 2) PV.row(n) = -PV.row(n);
        M_ = V_.adjoint() * PV;
    }

    int dim() const { return static_cast<int>(lambda_.size()); }

    /// W(beta) = (2/pi) sum_n (-1)^n <n| D(beta)^dag rho D(beta) |n> with
    /// the displacement D(beta) the exponential of beta b^dag - beta* b.
    WignerGrid evaluate(const DensityMatrix& rho, const WignerGridSpec& spec = {}) {
        spec.validate();
        const int N = rho.dim();
        if (N != dim()) throw DimensionMismatch("wigner: evaluator dim mismatch");
        const double tail = rho.mat(N - 1, N - 1).real();
        if (tail > 1e-8)
            throw TruncationInsufficient(
                "wigner: top Fock population " + std::to_string(tail) +
                " exceeds 1e-8; raise the truncation dimension");

        WignerGrid grid;
        grid.re_beta.setLinSpaced(spec.re_points, spec.re_min, spec.re_max);
        grid.im_beta.setLinSpaced(spec.im_points, spec.im_min, spec.im_max);
        if (spec.re_points == 1) grid.re_beta(0) = spec.re_min;
        if (spec.im_points == 1) grid.im_beta(0) = spec.im_min;
        grid.values.resize(spec.re_points, spec.im_points);

        ComplexVector ph(N);
        ComplexMatrix rho_theta(N, N);
        const Complex im(0.0, 1.0);
        for (int i = 0; i < spec.re_points; ++i) {
            const double re = grid.re_beta(i);
            for (int j = 0; j < spec.im_points; ++j) {
                const double imb = grid.im_beta(j);
                const double r2 = re * re + imb * imb;
                const ComplexMatrix& Pi = parity(r2);
                const double theta = (r2 > 0.0) ? std::atan2(imb, re) : 0.0;
                for (int n = 0; n < N; ++n) ph(n) = std::exp(im * (theta * n));
                rho_theta = ph.conjugate().asDiagonal() * rho.mat * ph.asDiagonal();
                const Complex w = (rho_theta.transpose().cwiseProduct(Pi)).sum();
                if (std::abs(w.imag()) > 1e-10)
                    throw InvariantViolation("wigner: imaginary residue " +
                                             std::to_string(w.imag()));
                grid.values(i, j) = (2.0 / M_PI) * w.real();
            }
        }
        return grid;
    }

private:
    // Pi_r = D(r) P D(r)^dag for a real displacement r = sqrt(r2).
    const ComplexMatrix& parity(double r2) {
        auto it = cache_.find(r2);
        if (it != cache_.end()) return it->second;
        const double r = std::sqrt(r2);
        const int N = dim();
        ComplexVector phase(N);
        const Complex im(0.0, 1.0);
        for (int k = 0; k < N; ++k) phase(k) = std::exp(-im * (r * lambda_(k)));
        ComplexMatrix core = phase.asDiagonal() * M_ * phase.conjugate().asDiagonal();
        return cache_.emplace(r2, V_ * core * V_.adjoint()).first->second;
    }

    RealVector lambda_;
    ComplexMatrix V_;
    ComplexMatrix M_; // V^dag P V with P = diag((-1)^n)
    std::unordered_map<double, ComplexMatrix> cache_;
};

inline WignerGrid wigner(const DensityMatrix& rho, const WignerGridSpec& spec = {}) {
    WignerEvaluator eval(rho.dim());
    return eval.evaluate(rho, spec);
}

/// Propagate and log the charging observables at every grid point.
inline TrajectoryRecord record_trajectory(const ModelParams& p, const DensityMatrix& rho0,
                                          const std::vector<double>& tau_grid,
                                          const dynamics::PropagateOptions& opts = {}) {
    const auto states = dynamics::propagate_params(p, rho0, tau_grid, opts);
    RealVector levels(p.dim);
    for (int n = 0; n < p.dim; ++n) levels(n) = model::battery_level(p, n);
    const ComplexMatrix hB = model::battery_hamiltonian(p);

    TrajectoryRecord rec;
    const std::size_t M = tau_grid.size();
    rec.times = tau_grid;
    rec.energy.resize(M);
    rec.ergotropy.resize(M);
    rec.trace_err.resize(M);
    rec.min_eig.resize(M);
    rec.purity.resize(M);
    for (std::size_t k = 0; k < M; ++k) {
        const DensityMatrix& rho = states[k];
        const auto d = rho.diagnostics();
        rec.energy[k] = energy(rho, hB);
        const PassiveDecomposition pd = passive_decomposition(rho, levels);
        rec.ergotropy[k] = rec.energy[k] - pd.passive_energy;
        rec.trace_err[k] = d.trace_err;
        rec.min_eig[k] = d.min_eig;
        rec.purity[k] = (rho.mat * rho.mat).trace().real();
    }
    return rec;
}

} // namespace observables
} // namespace satqb
