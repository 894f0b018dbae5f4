// hilbert.hpp
// Pure states, density matrices and the d-point quantum Fourier transform.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"

namespace qptycho {

using Complex = std::complex<double>;
using Rng = std::mt19937_64;

/// Tolerance used for normalization and Hermiticity checks.
inline constexpr double kNormTolerance = 1e-12;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Seeds an independent generator for (seed, stream). Concurrent tasks derive
/// their seed as master_seed + task_index and never share a generator.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(~stream)));
}

/// Complex amplitude vector over the computational basis {|0>, ..., |d-1>}.
/// No normalization is imposed; projected states and PIE intermediates are
/// generally unnormalized.
class StateVector {
public:
    StateVector() = default;

    explicit StateVector(std::size_t dim) : amplitudes_(dim) {
        if (dim == 0) throw InvalidDimension("state dimension must be positive");
    }

    explicit StateVector(std::vector<Complex> amplitudes) : amplitudes_(std::move(amplitudes)) {
        if (amplitudes_.empty()) throw InvalidDimension("state dimension must be positive");
    }

    static StateVector basis(std::size_t dim, std::size_t level) {
        if (level >= dim) throw InvalidArgument("basis level out of range");
        StateVector s(dim);
        s.amplitudes_[level] = 1.0;
        return s;
    }

    static StateVector uniform(std::size_t dim) {
        StateVector s(dim);
        const double a = 1.0 / std::sqrt(static_cast<double>(dim));
        for (auto& c : s.amplitudes_) c = a;
        return s;
    }

    std::size_t dim() const noexcept { return amplitudes_.size(); }

    Complex& operator[](std::size_t k) { return amplitudes_[k]; }
    const Complex& operator[](std::size_t k) const { return amplitudes_[k]; }

    std::span<Complex> amplitudes() noexcept { return amplitudes_; }
    std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }

    double norm_squared() const noexcept {
        double s = 0.0;
        for (const auto& c : amplitudes_) s += std::norm(c);
        return s;
    }

    double norm() const noexcept { return std::sqrt(norm_squared()); }

    bool is_normalized(double tol = kNormTolerance) const noexcept {
        return std::abs(norm_squared() - 1.0) <= tol;
    }

    StateVector normalized() const {
        const double n = norm();
        if (n == 0.0) throw InvalidArgument("cannot normalize the zero vector");
        return scaled(Complex{1.0 / n, 0.0});
    }

    StateVector scaled(Complex factor) const {
        StateVector out = *this;
        for (auto& c : out.amplitudes_) c *= factor;
        return out;
    }

    /// <this|other>
    Complex inner(const StateVector& other) const {
        if (other.dim() != dim()) throw DimensionMismatch(dim(), other.dim());
        Complex s{0.0, 0.0};
        for (std::size_t k = 0; k < dim(); ++k) s += std::conj(amplitudes_[k]) * other.amplitudes_[k];
        return s;
    }

    friend bool operator==(const StateVector&, const StateVector&) = default;

private:
    std::vector<Complex> amplitudes_;
};

inline StateVector operator-(const StateVector& a, const StateVector& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch(a.dim(), b.dim());
    StateVector out = a;
    for (std::size_t k = 0; k < a.dim(); ++k) out[k] -= b[k];
    return out;
}

/// d x d density matrix, row-major. Construction validates Hermiticity,
/// unit trace and positive semidefiniteness.
class DensityMatrix {
public:
    DensityMatrix(std::size_t dim, std::vector<Complex> entries)
        : dim_(dim), entries_(std::move(entries)) {
        if (dim_ == 0) throw InvalidDimension("density matrix dimension must be positive");
        if (entries_.size() != dim_ * dim_)
            throw InvalidArgument("density matrix needs dim*dim entries");
        validate();
    }

    static DensityMatrix pure(const StateVector& psi) {
        const std::size_t d = psi.dim();
        std::vector<Complex> e(d * d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) e[i * d + j] = psi[i] * std::conj(psi[j]);
        return DensityMatrix(d, std::move(e));
    }

    static DensityMatrix maximally_mixed(std::size_t dim) {
        std::vector<Complex> e(dim * dim);
        for (std::size_t i = 0; i < dim; ++i) e[i * dim + i] = 1.0 / static_cast<double>(dim);
        return DensityMatrix(dim, std::move(e));
    }

    std::size_t dim() const noexcept { return dim_; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return entries_[i * dim_ + j]; }
    std::span<const Complex> entries() const noexcept { return entries_; }

    double trace() const noexcept {
        double t = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) t += entries_[i * dim_ + i].real();
        return t;
    }

private:
    void validate() const {
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > kNormTolerance)
                    throw InvalidArgument("density matrix is not Hermitian");
        if (std::abs(trace() - 1.0) > kNormTolerance)
            throw InvalidArgument("density matrix trace differs from 1");
        if (!positive_semidefinite(1e-10))
            throw InvalidArgument("density matrix has a negative eigenvalue");
    }

    // Cholesky of rho + shift*I succeeds iff every eigenvalue of rho exceeds -shift.
    bool positive_semidefinite(double shift) const {
        const std::size_t d = dim_;
        std::vector<Complex> l(d * d);
        for (std::size_t j = 0; j < d; ++j) {
            double diag = (*this)(j, j).real() + shift;
            for (std::size_t k = 0; k < j; ++k) diag -= std::norm(l[j * d + k]);
            if (!(diag > 0.0)) return false;
            const double ljj = std::sqrt(diag);
            l[j * d + j] = ljj;
            for (std::size_t i = j + 1; i < d; ++i) {
                Complex s = (*this)(i, j);
                for (std::size_t k = 0; k < j; ++k) s -= l[i * d + k] * std::conj(l[j * d + k]);
                l[i * d + j] = s / ljj;
            }
        }
        return true;
    }

    std::size_t dim_;
    std::vector<Complex> entries_;
};

/// Quantum Fourier transform on C^d with (F)_{jk} = d^{-1/2} exp(+2 pi i jk/d).
/// The matrix is tabulated once; apply/apply_inverse are O(d^2).
class FourierTransform {
public:
    explicit FourierTransform(std::size_t dim) : dim_(dim), matrix_(dim * dim) {
        if (dim == 0) throw InvalidDimension("transform dimension must be positive");
        const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
        std::vector<Complex> roots(dim);
        for (std::size_t m = 0; m < dim; ++m) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(dim);
            roots[m] = Complex{std::cos(angle) * scale, std::sin(angle) * scale};
        }
        for (std::size_t j = 0; j < dim; ++j)
            for (std::size_t k = 0; k < dim; ++k) matrix_[j * dim + k] = roots[(j * k) % dim];
    }

    std::size_t dim() const noexcept { return dim_; }
    Complex entry(std::size_t j, std::size_t k) const { return matrix_[j * dim_ + k]; }

    void apply(std::span<const Complex> in, std::span<Complex> out) const {
        check(in, out);
        for (std::size_t j = 0; j < dim_; ++j) {
            Complex s{0.0, 0.0};
            const Complex* row = &matrix_[j * dim_];
            for (std::size_t k = 0; k < dim_; ++k) s += row[k] * in[k];
            out[j] = s;
        }
    }

    void apply_inverse(std::span<const Complex> in, std::span<Complex> out) const {
        check(in, out);
        // F is symmetric, so F^dagger = conj(F).
        for (std::size_t j = 0; j < dim_; ++j) {
            Complex s{0.0, 0.0};
            const Complex* row = &matrix_[j * dim_];
            for (std::size_t k = 0; k < dim_; ++k) s += std::conj(row[k]) * in[k];
            out[j] = s;
        }
    }

    StateVector apply(const StateVector& psi) const {
        StateVector out(dim_);
        apply(psi.amplitudes(), out.amplitudes());
        return out;
    }

    StateVector apply_inverse(const StateVector& psi) const {
        StateVector out(dim_);
        apply_inverse(psi.amplitudes(), out.amplitudes());
        return out;
    }

private:
    void check(std::span<const Complex> in, std::span<Complex> out) const {
        if (in.size() != dim_) throw DimensionMismatch(dim_, in.size());
        if (out.size() != dim_) throw DimensionMismatch(dim_, out.size());
    }

    std::size_t dim_;
    std::vector<Complex> matrix_;
};

inline StateVector qft(const StateVector& psi) { return FourierTransform(psi.dim()).apply(psi); }

inline StateVector qft_inverse(const StateVector& psi) {
    return FourierTransform(psi.dim()).apply_inverse(psi);
}

/// Haar-random pure state: i.i.d. standard complex Gaussians, normalized.
inline StateVector haar_random_state(std::size_t dim, Rng& rng) {
    if (dim == 0) throw InvalidDimension("Haar sampling needs a positive dimension");
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Complex> amps(dim);
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (auto& c : amps) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            c = Complex{re, im};
            n2 += re * re + im * im;
        }
    } while (n2 == 0.0);
    return StateVector(std::move(amps)).normalized();
}

/// |<a|b>|^2 for normalized a, b.
inline double fidelity(const StateVector& a, const StateVector& b) { return std::norm(a.inner(b)); }

/// Tr(rho^2).
inline double purity(const DensityMatrix& rho) {
    const std::size_t d = rho.dim();
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) s += (rho(i, j) * rho(j, i)).real();
    return s;
}

/// rho = p |psi><psi| + (1 - p) I/d
inline DensityMatrix mix_with_white_noise(const StateVector& psi, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("mixing weight must lie in [0, 1]");
    if (!psi.is_normalized()) throw InvalidArgument("mixing requires a normalized state");
    const std::size_t d = psi.dim();
    const double noise = (1.0 - p) / static_cast<double>(d);
    std::vector<Complex> e(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            e[i * d + j] = p * psi[i] * std::conj(psi[j]);
            if (i == j) e[i * d + j] += noise;
        }
    return DensityMatrix(d, std::move(e));
}

/// Closed form of Tr(rho^2) for the white-noise mixture.
inline double white_noise_purity(double p, std::size_t dim) {
    const double d = static_cast<double>(dim);
    return p * p + 2.0 * p * (1.0 - p) / d + (1.0 - p) * (1.0 - p) / d;
}

}  // namespace qptycho
