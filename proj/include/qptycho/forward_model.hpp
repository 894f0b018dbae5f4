// forward_model.hpp
// Measurement simulation for the sliced Fourier-basis measurements and the
// amplitude dataset consumed by the reconstruction engine.
//
// Measurement convention: the outcome k of slice l has amplitude
// (F psi_l)_k where F is the forward QFT of hilbert.hpp. This is exactly the
// field sampled by far-field detector k (see optics.hpp), so simulated and
// detector-ordered experimental data share one column order.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "hilbert.hpp"
#include "projectors.hpp"

namespace qptycho {

/// Dense row-major n x d table; row l belongs to projector l.
template <class T>
struct Grid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> values;

    Grid() = default;
    Grid(std::size_t n, std::size_t d, T fill = T{}) : rows(n), cols(d), values(n * d, fill) {}

    T& operator()(std::size_t l, std::size_t k) { return values[l * cols + k]; }
    const T& operator()(std::size_t l, std::size_t k) const { return values[l * cols + k]; }

    std::span<T> row(std::size_t l) { return {values.data() + l * cols, cols}; }
    std::span<const T> row(std::size_t l) const { return {values.data() + l * cols, cols}; }

    T row_sum(std::size_t l) const {
        T s{};
        for (const auto& v : row(l)) s += v;
        return s;
    }

    T total() const {
        T s{};
        for (const auto& v : values) s += v;
        return s;
    }

    friend bool operator==(const Grid&, const Grid&) = default;
};

using ProbabilityGrid = Grid<double>;
using CountGrid = Grid<std::uint64_t>;

namespace detail {

inline void check_family_dim(const ProjectorFamily& family, std::size_t dim) {
    if (family.dim != dim) throw DimensionMismatch(family.dim, dim);
    if (family.size() == 0) throw InvalidArgument("projector family is empty");
}

}  // namespace detail

/// p_{lk} = |(F P_l psi)_k|^2. Row sums equal <psi|P_l|psi>.
inline ProbabilityGrid ideal_probabilities(const StateVector& psi, const ProjectorFamily& family) {
    detail::check_family_dim(family, psi.dim());
    const FourierTransform fourier(psi.dim());
    ProbabilityGrid grid(family.size(), psi.dim());
    StateVector measured(psi.dim());
    for (std::size_t l = 0; l < family.size(); ++l) {
        const StateVector sliced = apply(family[l], psi);
        fourier.apply(sliced.amplitudes(), measured.amplitudes());
        for (std::size_t k = 0; k < psi.dim(); ++k) grid(l, k) = std::norm(measured[k]);
    }
    return grid;
}

/// Born rule for a general state: p_{lk} = <f_k| P_l rho P_l |f_k>, with
/// <f_k| the k-th row of F.
inline ProbabilityGrid mixed_probabilities(const DensityMatrix& rho, const ProjectorFamily& family) {
    const std::size_t d = rho.dim();
    detail::check_family_dim(family, d);
    const FourierTransform fourier(d);
    ProbabilityGrid grid(family.size(), d);
    for (std::size_t l = 0; l < family.size(); ++l) {
        const auto& support = family[l].support();
        for (std::size_t k = 0; k < d; ++k) {
            Complex s{0.0, 0.0};
            for (auto i : support)
                for (auto j : support) s += fourier.entry(k, i) * rho(i, j) * std::conj(fourier.entry(k, j));
            grid(l, k) = s.real();
        }
    }
    return grid;
}

/// Probabilities of p|psi><psi| + (1-p) I/d by linearity of the Born rule:
/// p * pure grid + (1-p) * maximally-mixed grid. At p = 1 this reproduces
/// ideal_probabilities bit for bit.
inline ProbabilityGrid white_noise_probabilities(const StateVector& psi, double p, const ProjectorFamily& family) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("mixing weight must lie in [0, 1]");
    ProbabilityGrid grid = ideal_probabilities(psi, family);
    const double d = static_cast<double>(psi.dim());
    for (std::size_t l = 0; l < family.size(); ++l) {
        // |F_{km}|^2 = 1/d for every k, m.
        const double noise = static_cast<double>(family[l].rank()) / (d * d);
        for (auto& v : grid.row(l)) v = p * v + (1.0 - p) * noise;
    }
    return grid;
}

/// Independent Poisson counts with mean exposure * p_{lk}.
inline CountGrid sample_counts(const ProbabilityGrid& grid, double exposure, Rng& rng) {
    if (!(exposure > 0.0)) throw InvalidArgument("exposure must be positive");
    CountGrid counts(grid.rows, grid.cols, 0);
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        const double mean = exposure * grid.values[i];
        if (mean > 0.0) counts.values[i] = std::poisson_distribution<std::uint64_t>(mean)(rng);
    }
    return counts;
}

struct Provenance {
    enum class Kind { Exact, Sampled, Ingested };

    Kind kind = Kind::Exact;
    std::uint64_t seed = 0;  ///< sampled only
    double exposure = 0.0;   ///< sampled only
    std::string source_id;   ///< ingested only

    static Provenance exact() { return {}; }
    static Provenance sampled(std::uint64_t seed, double exposure) { return {Kind::Sampled, seed, exposure, {}}; }
    static Provenance ingested(std::string source) { return {Kind::Ingested, 0, 0.0, std::move(source)}; }
};

/// n x d amplitudes a_{lj} = sqrt(I_{lj}) on the probability scale, together
/// with the intensities they came from and the projector family used.
struct PtychographicDataset {
    ProjectorFamily family;
    ProbabilityGrid intensities;
    ProbabilityGrid amplitudes;
    Provenance provenance;
    std::size_t clamped_count = 0;  ///< negative inputs set to zero

    std::size_t n() const noexcept { return amplitudes.rows; }
    std::size_t dim() const noexcept { return amplitudes.cols; }

    bool all_zero() const {
        for (double a : amplitudes.values)
            if (a != 0.0) return false;
        return true;
    }
};

inline PtychographicDataset assemble_dataset(ProbabilityGrid raw, const ProjectorFamily& family, Provenance provenance) {
    if (raw.rows != family.size() || raw.cols != family.dim)
        throw InvalidArgument("data grid is " + std::to_string(raw.rows) + "x" + std::to_string(raw.cols) +
                              " but the family needs " + std::to_string(family.size()) + "x" +
                              std::to_string(family.dim));
    PtychographicDataset data{family, {}, ProbabilityGrid(raw.rows, raw.cols), std::move(provenance), 0};
    if (data.provenance.kind == Provenance::Kind::Sampled) {
        if (!(data.provenance.exposure > 0.0)) throw InvalidArgument("sampled data needs a positive exposure");
        for (auto& v : raw.values) v /= data.provenance.exposure;
    }
    for (auto& v : raw.values) {
        if (!std::isfinite(v)) throw InvalidArgument("data contains a non-finite intensity");
        if (v < 0.0) {
            v = 0.0;
            ++data.clamped_count;
        }
    }
    for (std::size_t i = 0; i < raw.values.size(); ++i) data.amplitudes.values[i] = std::sqrt(raw.values[i]);
    data.intensities = std::move(raw);
    return data;
}

inline PtychographicDataset assemble_dataset(const CountGrid& counts, const ProjectorFamily& family,
                                             Provenance provenance) {
    ProbabilityGrid raw(counts.rows, counts.cols);
    for (std::size_t i = 0; i < counts.values.size(); ++i) raw.values[i] = static_cast<double>(counts.values[i]);
    return assemble_dataset(std::move(raw), family, std::move(provenance));
}

// ---------------------------------------------------------------------------
// Dataset CSV
//
//   # ptycho-dataset v1, d=<d>, n=<n>, family=<kind>, scale=<float>
//   I_00,I_01,...,I_0(d-1)
//   ...
//
// Intensities only; amplitudes are recomputed on ingest.

inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw Error("failed to format a floating-point value");
    return std::string(buf, end);
}

inline void export_csv(const PtychographicDataset& data, std::ostream& out) {
    out << "# ptycho-dataset v1, d=" << data.dim() << ", n=" << data.n()
        << ", family=" << to_string(data.family.kind) << ", scale=1\n";
    for (std::size_t l = 0; l < data.n(); ++l) {
        for (std::size_t j = 0; j < data.dim(); ++j) {
            if (j) out << ',';
            out << format_double(data.intensities(l, j));
        }
        out << '\n';
    }
}

struct IngestOptions {
    /// Required when the file declares family=Custom; otherwise checked against the header.
    std::optional<ProjectorFamily> family;
    /// Overrides the header scale. Without either, rows are scaled by 1/max row sum.
    std::optional<double> calibration;
    /// Negative values no lower than -tolerance * (largest intensity) are clamped to 0.
    double negative_tolerance = 0.05;
    std::string source_id = "csv";
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline bool parse_number(std::string_view text, double& value) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return false;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

struct CsvHeader {
    std::size_t dim = 0;
    std::size_t n = 0;
    FamilyKind kind = FamilyKind::Custom;
    std::optional<double> scale;  ///< empty means "auto"
};

inline CsvHeader parse_header(std::string_view line) {
    constexpr std::string_view magic = "# ptycho-dataset v1";
    line = trim(line);
    if (line.substr(0, magic.size()) != magic) throw ParseError(1, "missing '# ptycho-dataset v1' header");
    CsvHeader h;
    bool have_d = false, have_n = false, have_family = false;
    std::string_view rest = line.substr(magic.size());
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto field = trim(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        if (field.empty()) continue;
        const auto eq = field.find('=');
        if (eq == std::string_view::npos) throw ParseError(1, "header field '" + std::string(field) + "' lacks '='");
        const auto key = trim(field.substr(0, eq));
        const auto value = trim(field.substr(eq + 1));
        double number = 0.0;
        if (key == "d" || key == "n") {
            if (!parse_number(value, number) || number < 1 || number != std::floor(number))
                throw ParseError(1, "header field " + std::string(key) + " is not a positive integer");
            (key == "d" ? h.dim : h.n) = static_cast<std::size_t>(number);
            (key == "d" ? have_d : have_n) = true;
        } else if (key == "family") {
            try {
                h.kind = parse_family_kind(value);
            } catch (const InvalidArgument& e) {
                throw ParseError(1, e.what());
            }
            have_family = true;
        } else if (key == "scale") {
            if (value == "auto") {
                h.scale.reset();
            } else if (!parse_number(value, number) || !(number > 0.0) || !std::isfinite(number)) {
                throw ParseError(1, "header scale must be a positive number or 'auto'");
            } else {
                h.scale = number;
            }
        } else {
            throw ParseError(1, "unknown header field '" + std::string(key) + "'");
        }
    }
    if (!have_d || !have_n || !have_family) throw ParseError(1, "header must declare d, n and family");
    return h;
}

}  // namespace detail

inline PtychographicDataset ingest_csv(std::istream& source, const IngestOptions& options = {}) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(source, line)) throw ParseError(1, "empty input");
    ++line_no;
    const auto header = detail::parse_header(line);

    ProjectorFamily family;
    if (header.kind == FamilyKind::Custom) {
        if (!options.family) throw ParseError(1, "family=Custom requires an explicit projector family");
        family = *options.family;
    } else {
        try {
            family = build_family(header.dim, header.kind);
        } catch (const Error& e) {
            throw ParseError(1, e.what());
        }
        if (options.family && *options.family != family)
            throw ParseError(1, "supplied projector family does not match the header");
    }
    if (family.dim != header.dim || family.size() != header.n)
        throw ParseError(1, "header declares d=" + std::to_string(header.dim) + ", n=" + std::to_string(header.n) +
                                " but the family is " + std::to_string(family.size()) + "x" +
                                std::to_string(family.dim));

    ProbabilityGrid raw(header.n, header.dim);
    std::vector<std::size_t> row_lines;
    while (std::getline(source, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const std::size_t l = row_lines.size();
        if (l >= header.n)
            throw ParseError(line_no, "extra data row; header declares n=" + std::to_string(header.n));
        std::size_t column = 0;
        std::string_view rest = text;
        while (true) {
            const auto comma = rest.find(',');
            const auto cell = rest.substr(0, comma);
            double value = 0.0;
            if (column >= header.dim)
                throw ParseError(line_no, "row " + std::to_string(l) + " has more than d=" +
                                              std::to_string(header.dim) + " columns");
            if (!detail::parse_number(cell, value) || !std::isfinite(value))
                throw ParseError(line_no, "column " + std::to_string(column) + ": '" +
                                              std::string(detail::trim(cell)) + "' is not a finite number");
            raw(l, column++) = value;
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        if (column != header.dim)
            throw ParseError(line_no, "row " + std::to_string(l) + " has " + std::to_string(column) +
                                          " columns, expected d=" + std::to_string(header.dim));
        row_lines.push_back(line_no);
    }
    if (row_lines.size() != header.n)
        throw ParseError(line_no, "found " + std::to_string(row_lines.size()) + " data rows, header declares n=" +
                                      std::to_string(header.n));

    double largest = 0.0;
    for (double v : raw.values) largest = std::max(largest, v);
    for (std::size_t l = 0; l < raw.rows; ++l)
        for (std::size_t j = 0; j < raw.cols; ++j)
            if (raw(l, j) < -options.negative_tolerance * largest)
                throw ParseError(row_lines[l], "column " + std::to_string(j) + ": negative intensity " +
                                                   format_double(raw(l, j)) + " exceeds the clamping tolerance");

    double calibration = 1.0;
    if (options.calibration) {
        if (!(*options.calibration > 0.0)) throw InvalidArgument("calibration constant must be positive");
        calibration = *options.calibration;
    } else if (header.scale) {
        calibration = *header.scale;
    } else {
        double max_row = 0.0;
        for (std::size_t l = 0; l < raw.rows; ++l) {
            double s = 0.0;
            for (double v : raw.row(l)) s += std::max(v, 0.0);
            max_row = std::max(max_row, s);
        }
        if (max_row > 0.0) calibration = 1.0 / max_row;
    }
    if (calibration != 1.0)
        for (auto& v : raw.values) v *= calibration;

    return assemble_dataset(std::move(raw), family, Provenance::ingested(options.source_id));
}

inline PtychographicDataset ingest_csv(std::string_view text, const IngestOptions& options = {}) {
    std::istringstream in{std::string(text)};
    return ingest_csv(in, options);
}

}  // namespace qptycho
