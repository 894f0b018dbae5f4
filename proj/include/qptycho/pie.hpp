// pie.hpp
// Ptychographic iterative engine for pure-state reconstruction.
//
// One sweep visits every projector once, in ascending order. For projector l
// with support S_l and measured amplitudes a_l:
//
//   Phi   = F P_l phi                       (slice into the measurement basis)
//   Phi'_k = a_lk Phi_k / |Phi_k|           (phase 1 when |Phi_k| < 1e-14)
//   psi'  = F^dagger Phi'
//   phi  <- phi + beta P_l (psi' - P_l phi)
//
// The generic PIE weight P*/max|P|^2 is P_l itself for a binary diagonal
// projector. The stagnation metric D = (|phi_after - phi_before| / |phi_before|)^2
// is evaluated once per sweep.

#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "error.hpp"
#include "forward_model.hpp"
#include "hilbert.hpp"
#include "projectors.hpp"

namespace qptycho {

/// Random stream reserved for PIE starting estimates (see make_rng).
inline constexpr std::uint64_t kPieStream = 1;

struct PieConfig {
    double beta = 1.6;
    double distance_tolerance = 1e-2;
    std::size_t max_sweeps = 25;
    std::size_t max_restarts = 100;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
        if (!(distance_tolerance > 0.0)) throw InvalidArgument("distance tolerance must be positive");
        if (max_sweeps < 1) throw InvalidArgument("max_sweeps must be at least 1");
    }
};

struct ReconstructionResult {
    StateVector estimate;  ///< normalized
    bool converged = false;
    std::size_t sweeps_used = 0;    ///< sweeps of the returned attempt
    std::size_t restarts_used = 0;  ///< fresh random starts after the first
    double final_distance = 0.0;    ///< D of the returned attempt's last sweep
    double residual = 0.0;
    std::chrono::nanoseconds wall_time{0};
};

struct SweepOutcome {
    StateVector estimate;
    double distance;
};

/// Outcome of one attempt from a fixed starting estimate.
struct AttemptOutcome {
    StateVector estimate;  ///< unnormalized
    bool converged = false;
    std::size_t sweeps = 0;
    double final_distance = 0.0;
};

namespace detail {

inline constexpr double kZeroAmplitude = 1e-14;

inline void check_inputs(const PtychographicDataset& data, const ProjectorFamily& family) {
    if (data.dim() != family.dim) throw DimensionMismatch(family.dim, data.dim());
    if (data.n() != family.size())
        throw InvalidArgument("dataset has " + std::to_string(data.n()) + " rows but the family has " +
                              std::to_string(family.size()) + " projectors");
}

/// Scratch space shared by consecutive sweeps of one reconstruction.
class SweepKernel {
public:
    explicit SweepKernel(std::size_t dim) : fourier_(dim), measured_(dim), before_(dim) {}

    const FourierTransform& fourier() const noexcept { return fourier_; }

    /// One full sweep in place; returns D.
    double sweep(std::span<Complex> phi, const PtychographicDataset& data, const ProjectorFamily& family,
                 double beta) {
        const std::size_t d = fourier_.dim();
        std::copy(phi.begin(), phi.end(), before_.begin());
        double before_norm2 = 0.0;
        for (const auto& c : before_) before_norm2 += std::norm(c);
        if (!(before_norm2 > 0.0)) throw DegenerateEstimate("PIE estimate collapsed to zero");

        for (std::size_t l = 0; l < family.size(); ++l) {
            const auto& support = family[l].support();
            const auto amplitudes = data.amplitudes.row(l);
            for (std::size_t k = 0; k < d; ++k) {
                Complex s{0.0, 0.0};
                for (auto m : support) s += fourier_.entry(k, m) * phi[m];
                const double mag = std::abs(s);
                measured_[k] = mag < kZeroAmplitude ? Complex{amplitudes[k], 0.0} : s * (amplitudes[k] / mag);
            }
            for (auto m : support) {
                // (F^dagger Phi')_m; F is symmetric.
                Complex s{0.0, 0.0};
                for (std::size_t k = 0; k < d; ++k) s += std::conj(fourier_.entry(m, k)) * measured_[k];
                phi[m] += beta * (s - phi[m]);
            }
        }

        double diff2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) diff2 += std::norm(phi[k] - before_[k]);
        return diff2 / before_norm2;
    }

    /// Amplitude misfit of the normalized estimate.
    double residual(std::span<const Complex> estimate, const PtychographicDataset& data,
                    const ProjectorFamily& family) {
        const std::size_t d = fourier_.dim();
        double n2 = 0.0;
        for (const auto& c : estimate) n2 += std::norm(c);
        if (!(n2 > 0.0)) return std::numeric_limits<double>::infinity();
        const double inv = 1.0 / std::sqrt(n2);
        double r = 0.0;
        for (std::size_t l = 0; l < family.size(); ++l) {
            const auto& support = family[l].support();
            for (std::size_t k = 0; k < d; ++k) {
                Complex s{0.0, 0.0};
                for (auto m : support) s += fourier_.entry(k, m) * estimate[m];
                const double diff = std::abs(s) * inv - data.amplitudes(l, k);
                r += diff * diff;
            }
        }
        return r;
    }

private:
    FourierTransform fourier_;
    std::vector<Complex> measured_;
    std::vector<Complex> before_;
};

}  // namespace detail

inline SweepOutcome pie_sweep(const StateVector& estimate, const PtychographicDataset& data,
                              const ProjectorFamily& family, double beta) {
    detail::check_inputs(data, family);
    if (estimate.dim() != family.dim) throw DimensionMismatch(family.dim, estimate.dim());
    detail::SweepKernel kernel(family.dim);
    SweepOutcome out{estimate, 0.0};
    out.distance = kernel.sweep(out.estimate.amplitudes(), data, family, beta);
    return out;
}

/// Sum over (l, k) of (|(F P_l phi)_k| - a_lk)^2 for the normalized estimate.
inline double residual(const StateVector& estimate, const PtychographicDataset& data, const ProjectorFamily& family) {
    detail::check_inputs(data, family);
    if (estimate.dim() != family.dim) throw DimensionMismatch(family.dim, estimate.dim());
    return detail::SweepKernel(family.dim).residual(estimate.amplitudes(), data, family);
}

/// Sweeps from `start` until D < tolerance or max_sweeps. No restarts.
inline AttemptOutcome run_attempt(const StateVector& start, const PtychographicDataset& data,
                                  const ProjectorFamily& family, const PieConfig& config) {
    config.validate();
    detail::check_inputs(data, family);
    if (start.dim() != family.dim) throw DimensionMismatch(family.dim, start.dim());
    detail::SweepKernel kernel(family.dim);
    AttemptOutcome out{start};
    while (out.sweeps < config.max_sweeps) {
        out.final_distance = kernel.sweep(out.estimate.amplitudes(), data, family, config.beta);
        ++out.sweeps;
        if (out.final_distance < config.distance_tolerance) {
            out.converged = true;
            break;
        }
    }
    return out;
}

/// Full reconstruction with random restarts. Each attempt starts from a
/// normalized Haar-random estimate drawn from stream kPieStream of
/// config.seed. If no attempt converges, the attempt with the smallest
/// residual is returned with converged = false.
inline ReconstructionResult reconstruct(const PtychographicDataset& data, const ProjectorFamily& family,
                                        const PieConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    detail::check_inputs(data, family);
    if (!validate_set(family).ok) throw InvalidArgument("projector family fails the coverage/overlap check");
    if (data.all_zero()) throw InvalidArgument("dataset is all zeros");

    const std::size_t d = family.dim;
    Rng rng = make_rng(config.seed, kPieStream);
    detail::SweepKernel kernel(d);

    ReconstructionResult result;
    std::optional<ReconstructionResult> best;
    for (std::size_t attempt = 0; attempt <= config.max_restarts; ++attempt) {
        StateVector phi = haar_random_state(d, rng);
        bool converged = false;
        bool degenerate = false;
        std::size_t sweeps = 0;
        double distance = std::numeric_limits<double>::infinity();
        while (sweeps < config.max_sweeps) {
            try {
                distance = kernel.sweep(phi.amplitudes(), data, family, config.beta);
            } catch (const DegenerateEstimate&) {
                degenerate = true;
                break;
            }
            ++sweeps;
            if (distance < config.distance_tolerance) {
                converged = true;
                break;
            }
        }
        if (degenerate || !std::isfinite(phi.norm_squared()) || phi.norm_squared() == 0.0) continue;

        ReconstructionResult candidate;
        candidate.estimate = phi.normalized();
        candidate.converged = converged;
        candidate.sweeps_used = sweeps;
        candidate.restarts_used = attempt;
        candidate.final_distance = distance;
        candidate.residual = kernel.residual(candidate.estimate.amplitudes(), data, family);
        if (converged) {
            result = std::move(candidate);
            result.wall_time = std::chrono::steady_clock::now() - t0;
            return result;
        }
        if (!best || candidate.residual < best->residual) best = std::move(candidate);
    }
    if (!best) throw DegenerateEstimate("every PIE attempt collapsed to zero");
    result = std::move(*best);
    result.restarts_used = config.max_restarts;
    result.wall_time = std::chrono::steady_clock::now() - t0;
    return result;
}

}  // namespace qptycho
