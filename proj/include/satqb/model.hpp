#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "satqb/linalg.hpp"

namespace satqb {

/// Physical parameters of the driven-dissipative saturable battery.
/// Units: hbar = 1, energies in units of the cavity frequency scale.
/// omega and detuning are stored; the drive frequency is derived so the
/// relation detuning = omega - drive_freq holds identically.
struct ModelParams {
    double omega = 1.0;    // cavity angular frequency
    double detuning = 0.1; // Delta = omega - drive frequency
    double chi = 1.0;      // nonlinear strength
    double n_s = 0.0;      // saturation parameter, >= 0
    double alpha = 0.5;    // drive amplitude
    double gamma = 0.2;    // loss rate, >= 0
    int dim = 40;          // Fock truncation, >= 2

    double drive_freq() const { return omega - detuning; }

    static ModelParams with_drive_freq(double omega, double drive_freq) {
        ModelParams p;
        p.omega = omega;
        p.detuning = omega - drive_freq;
        return p;
    }

    void validate() const {
        if (!(n_s >= 0.0)) throw ConfigError("ModelParams: n_s must be >= 0");
        if (!(gamma >= 0.0)) throw ConfigError("ModelParams: gamma must be >= 0");
        if (dim < 2) throw ConfigError("ModelParams: dim must be >= 2");
        for (double v : {omega, detuning, chi, n_s, alpha, gamma})
            if (!std::isfinite(v)) throw ConfigError("ModelParams: non-finite parameter");
    }
};

/// Closed-form spectrum of the bare battery and its Kerr comparison.
struct SpectrumTable {
    std::vector<int> n;
    std::vector<double> E_n;
    std::optional<std::vector<double>> E_n_kerr;
};

namespace model {

/// Bosonic annihilation operator on the first N Fock states:
/// <n-1|b|n> = sqrt(n) on the superdiagonal.
inline ComplexMatrix annihilation(int N) {
    if (N < 2) throw DimensionTooSmall("annihilation: need N >= 2, got " + std::to_string(N));
    ComplexMatrix b = ComplexMatrix::Zero(N, N);
    for (int n = 1; n < N; ++n) b(n - 1, n) = std::sqrt(static_cast<double>(n));
    return b;
}

inline ComplexMatrix number_operator(int N) {
    if (N < 2) throw DimensionTooSmall("number_operator: need N >= 2");
    ComplexMatrix nd = ComplexMatrix::Zero(N, N);
    for (int n = 0; n < N; ++n) nd(n, n) = static_cast<double>(n);
    return nd;
}

/// E_n of the bare battery. The saturable fraction acts entrywise on
/// occupation numbers because b^dag b is diagonal; this is exact.
inline double battery_level(const ModelParams& p, int n) {
    const double nn = static_cast<double>(n);
    return p.omega * nn + p.chi * nn / (1.0 + p.n_s * nn);
}

/// Second-order (Kerr) expansion of the saturable level, for comparison
/// only. Valid while the parabolic term stays small against the linear one.
inline double kerr_level(const ModelParams& p, int n) {
    const double nn = static_cast<double>(n);
    return (p.omega + p.chi) * nn - p.n_s * p.chi * nn * nn;
}

/// Rotating-frame diagonal entry: Delta n + chi n / (1 + n_s n).
inline double rotating_level(const ModelParams& p, int n) {
    const double nn = static_cast<double>(n);
    return p.detuning * nn + p.chi * nn / (1.0 + p.n_s * nn);
}

/// Lab-frame battery Hamiltonian h_B = omega b'b + chi b'b/(1 + n_s b'b),
/// diagonal in the Fock basis.
inline ComplexMatrix battery_hamiltonian(const ModelParams& p) {
    p.validate();
    ComplexMatrix h = ComplexMatrix::Zero(p.dim, p.dim);
    for (int n = 0; n < p.dim; ++n) h(n, n) = battery_level(p, n);
    return h;
}

/// Rotating-frame Hamiltonian: Delta b'b + chi b'b/(1 + n_s b'b) + alpha(b + b').
/// Manifestly Hermitian by construction (real tridiagonal).
inline ComplexMatrix rotating_hamiltonian(const ModelParams& p) {
    p.validate();
    ComplexMatrix H = ComplexMatrix::Zero(p.dim, p.dim);
    for (int n = 0; n < p.dim; ++n) H(n, n) = rotating_level(p, n);
    for (int n = 1; n < p.dim; ++n) {
        const double c = p.alpha * std::sqrt(static_cast<double>(n));
        H(n - 1, n) = c;
        H(n, n - 1) = c;
    }
    return H;
}

inline SpectrumTable spectrum_table(const ModelParams& p, bool include_kerr = false) {
    p.validate();
    SpectrumTable t;
    t.n.reserve(p.dim);
    t.E_n.reserve(p.dim);
    for (int n = 0; n < p.dim; ++n) {
        t.n.push_back(n);
        t.E_n.push_back(battery_level(p, n));
    }
    if (include_kerr) {
        std::vector<double> kerr;
        kerr.reserve(p.dim);
        for (int n = 0; n < p.dim; ++n) kerr.push_back(kerr_level(p, n));
        t.E_n_kerr = std::move(kerr);
    }
    return t;
}

} // namespace model
} // namespace satqb
