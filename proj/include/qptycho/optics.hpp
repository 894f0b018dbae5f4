// optics.hpp
// Slit-array optics: top-hat near field, Fraunhofer far field, and the
// detector positions x_j = -lambda f mu_j / (delta d) at which the far field
// realizes the Fourier-basis measurement.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <vector>

#include "error.hpp"
#include "forward_model.hpp"
#include "hilbert.hpp"

namespace qptycho {

/// Lengths in meters. Slit k is centered at k * pitch.
struct OpticalGeometry {
    double wavelength = 687e-9;
    double focal_length = 0.30;
    double pitch = 176e-6;
    double slit_width = 88e-6;
    std::size_t dim = 0;

    void validate() const {
        if (!(wavelength > 0.0 && focal_length > 0.0 && pitch > 0.0 && slit_width > 0.0))
            throw InvalidArgument("optical lengths must be positive");
        if (!(slit_width < pitch)) throw InvalidArgument("slit width must be smaller than the pitch");
        if (dim == 0) throw InvalidDimension("geometry dimension must be positive");
    }
};

/// SLM-derived slit array with 8 um pixels: 11 px slits separated by 11 px
/// for d < 20, and 9 px slits separated by 5 px for d >= 20.
inline OpticalGeometry laboratory_geometry(std::size_t dim) {
    constexpr double pixel = 8e-6;
    OpticalGeometry g;
    g.dim = dim;
    if (dim < 20) {
        g.slit_width = 11 * pixel;
        g.pitch = (11 + 11) * pixel;
    } else {
        g.slit_width = 9 * pixel;
        g.pitch = (9 + 5) * pixel;
    }
    return g;
}

struct DetectorLayout {
    std::vector<double> positions;
    std::vector<long> index_map;  ///< mu_j
};

/// mu_j = j for j <= d/2, j - d otherwise.
inline long detector_index(std::size_t j, std::size_t dim) {
    return 2 * j <= dim ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(dim);
}

inline DetectorLayout detector_positions(const OpticalGeometry& geom) {
    geom.validate();
    DetectorLayout layout;
    layout.positions.resize(geom.dim);
    layout.index_map.resize(geom.dim);
    const double d = static_cast<double>(geom.dim);
    for (std::size_t j = 0; j < geom.dim; ++j) {
        const long mu = detector_index(j, geom.dim);
        layout.index_map[j] = mu;
        layout.positions[j] = -geom.wavelength * geom.focal_length * static_cast<double>(mu) / (geom.pitch * d);
    }
    return layout;
}

namespace detail {

inline double sinc(double u) { return u == 0.0 ? 1.0 : std::sin(u) / u; }

inline void check_geometry(const StateVector& psi, const OpticalGeometry& geom) {
    geom.validate();
    if (psi.dim() != geom.dim) throw DimensionMismatch(geom.dim, psi.dim());
}

}  // namespace detail

/// Single-slit diffraction envelope sinc^2(pi a x / (lambda f)).
inline double slit_envelope(const OpticalGeometry& geom, double x) {
    const double s = detail::sinc(std::numbers::pi * geom.slit_width * x / (geom.wavelength * geom.focal_length));
    return s * s;
}

/// |sum_k c_k exp(-2 pi i k delta x / (lambda f))|^2
inline double interference_term(const StateVector& psi, const OpticalGeometry& geom, double x) {
    const double phase_step = -2.0 * std::numbers::pi * geom.pitch * x / (geom.wavelength * geom.focal_length);
    Complex field{0.0, 0.0};
    for (std::size_t k = 0; k < psi.dim(); ++k) field += psi[k] * std::polar(1.0, phase_step * static_cast<double>(k));
    return std::norm(field);
}

inline double far_field_intensity(const StateVector& psi, const OpticalGeometry& geom, double x) {
    detail::check_geometry(psi, geom);
    return slit_envelope(geom, x) * interference_term(psi, geom, x);
}

inline double near_field_intensity(const StateVector& psi, const OpticalGeometry& geom, double x) {
    detail::check_geometry(psi, geom);
    const double half = 0.5 * geom.slit_width;
    double intensity = 0.0;
    for (std::size_t k = 0; k < psi.dim(); ++k)
        if (std::abs(x - static_cast<double>(k) * geom.pitch) <= half) intensity += std::norm(psi[k]);
    return intensity;
}

enum class Envelope { Off, On };

/// Far-field intensities at the d detector positions, divided by d. With the
/// envelope off this is |(F psi)_j|^2: at x_j the slit phase
/// exp(-2 pi i k delta x_j / (lambda f)) equals exp(+2 pi i k j / d).
inline std::vector<double> sample_at_detectors(const StateVector& psi, const OpticalGeometry& geom,
                                               Envelope envelope = Envelope::Off) {
    detail::check_geometry(psi, geom);
    const auto layout = detector_positions(geom);
    const double d = static_cast<double>(geom.dim);
    std::vector<double> out(geom.dim);
    for (std::size_t j = 0; j < geom.dim; ++j) {
        out[j] = interference_term(psi, geom, layout.positions[j]) / d;
        if (envelope == Envelope::On) out[j] *= slit_envelope(geom, layout.positions[j]);
    }
    return out;
}

/// Detector samples for every slice P_l psi, in detector order.
inline ProbabilityGrid detector_probabilities(const StateVector& psi, const ProjectorFamily& family,
                                              const OpticalGeometry& geom, Envelope envelope) {
    detail::check_family_dim(family, psi.dim());
    ProbabilityGrid grid(family.size(), psi.dim());
    for (std::size_t l = 0; l < family.size(); ++l) {
        const auto row = sample_at_detectors(apply(family[l], psi), geom, envelope);
        std::copy(row.begin(), row.end(), grid.row(l).begin());
    }
    return grid;
}

/// min_j / max_j of the envelope over the detector positions.
inline double envelope_contrast(const OpticalGeometry& geom) {
    const auto layout = detector_positions(geom);
    double lo = 1.0, hi = 0.0;
    for (double x : layout.positions) {
        const double e = slit_envelope(geom, x);
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    return lo / hi;
}

struct ProfilePoint {
    double x;
    double intensity;
};

/// Samples a profile on [lo, hi] with `points` evenly spaced positions.
template <class IntensityFn>
std::vector<ProfilePoint> sample_profile(IntensityFn&& fn, double lo, double hi, std::size_t points) {
    if (points < 2) throw InvalidArgument("a profile needs at least two points");
    std::vector<ProfilePoint> out(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        out[i] = {x, fn(x)};
    }
    return out;
}

inline void write_profile_csv(std::ostream& out, const std::vector<ProfilePoint>& profile) {
    out << "x,intensity\n";
    for (const auto& p : profile) out << format_double(p.x) << ',' << format_double(p.intensity) << '\n';
}

}  // namespace qptycho
