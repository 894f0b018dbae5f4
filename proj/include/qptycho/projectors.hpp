// projectors.hpp
// Diagonal binary "slicing" projectors P_l = sum_{j<r} |j (+) s_l><j (+) s_l|
// and the two standard families built from them.

#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "hilbert.hpp"
#include "json.hpp"

namespace qptycho {

enum class FamilyKind { FamilyI, FamilyII, Custom };

inline std::string to_string(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::FamilyI: return "FamilyI";
        case FamilyKind::FamilyII: return "FamilyII";
        case FamilyKind::Custom: return "Custom";
    }
    return "Custom";
}

inline FamilyKind parse_family_kind(std::string_view name) {
    if (name == "FamilyI" || name == "I" || name == "i" || name == "1") return FamilyKind::FamilyI;
    if (name == "FamilyII" || name == "II" || name == "ii" || name == "2") return FamilyKind::FamilyII;
    if (name == "Custom" || name == "custom") return FamilyKind::Custom;
    throw InvalidArgument("unknown projector family '" + std::string(name) + "'");
}

/// Projector onto a set of computational-basis levels. Stored as its support;
/// applying it is a mask.
class RankProjector {
public:
    RankProjector(std::size_t dim, std::vector<std::size_t> support, std::size_t shift = 0)
        : dim_(dim), shift_(shift), support_(std::move(support)), mask_(dim, 0) {
        if (dim_ == 0) throw InvalidDimension("projector dimension must be positive");
        if (support_.empty()) throw InvalidArgument("projector support is empty");
        for (auto k : support_) {
            if (k >= dim_) throw InvalidArgument("projector support index out of range");
            if (mask_[k]) throw InvalidArgument("projector support has a repeated index");
            mask_[k] = 1;
        }
    }

    /// Contiguous window {s, s+1, ..., s+r-1} modulo d.
    static RankProjector window(std::size_t dim, std::size_t shift, std::size_t rank) {
        if (dim == 0) throw InvalidDimension("projector dimension must be positive");
        if (rank == 0 || rank > dim) throw InvalidArgument("window rank must lie in [1, dim]");
        std::vector<std::size_t> support(rank);
        for (std::size_t j = 0; j < rank; ++j) support[j] = (j + shift) % dim;
        return RankProjector(dim, std::move(support), shift);
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t rank() const noexcept { return support_.size(); }
    std::size_t shift() const noexcept { return shift_; }
    const std::vector<std::size_t>& support() const noexcept { return support_; }
    bool contains(std::size_t level) const { return level < dim_ && mask_[level] != 0; }

    friend bool operator==(const RankProjector& a, const RankProjector& b) {
        return a.dim_ == b.dim_ && a.shift_ == b.shift_ && a.support_ == b.support_;
    }

private:
    std::size_t dim_;
    std::size_t shift_;
    std::vector<std::size_t> support_;
    std::vector<char> mask_;
};

struct ProjectorFamily {
    std::size_t dim = 0;
    FamilyKind kind = FamilyKind::Custom;
    std::vector<RankProjector> projectors;

    std::size_t size() const noexcept { return projectors.size(); }
    const RankProjector& operator[](std::size_t l) const { return projectors[l]; }

    friend bool operator==(const ProjectorFamily&, const ProjectorFamily&) = default;
};

/// ceil(d/2), the rank used by both standard families.
inline std::size_t standard_rank(std::size_t dim) { return (dim + 1) / 2; }

/// Family (i): n = 5, s_l = l*floor(d/5). Family (ii): n = d, s_l = l.
/// Both use r = ceil(d/2). Family (i) is rejected for d < 5, where all five
/// shifts would coincide.
inline ProjectorFamily build_family(std::size_t dim, FamilyKind kind) {
    if (dim < 3) throw InvalidDimension("projector families need d >= 3");
    ProjectorFamily family{dim, kind, {}};
    const std::size_t rank = standard_rank(dim);
    switch (kind) {
        case FamilyKind::FamilyI: {
            if (dim < 5) throw InvalidDimension("family (i) needs d >= 5");
            const std::size_t skip = dim / 5;
            for (std::size_t l = 0; l < 5; ++l)
                family.projectors.push_back(RankProjector::window(dim, l * skip, rank));
            break;
        }
        case FamilyKind::FamilyII:
            for (std::size_t l = 0; l < dim; ++l)
                family.projectors.push_back(RankProjector::window(dim, l, rank));
            break;
        case FamilyKind::Custom:
            throw InvalidArgument("custom families are built from explicit supports");
    }
    return family;
}

inline ProjectorFamily custom_family(std::size_t dim, const std::vector<std::vector<std::size_t>>& supports) {
    ProjectorFamily family{dim, FamilyKind::Custom, {}};
    for (const auto& s : supports) family.projectors.emplace_back(dim, s);
    return family;
}

struct ValidationReport {
    std::vector<std::size_t> coverage;             ///< m_j: projectors containing level j
    std::vector<std::vector<std::size_t>> overlap;  ///< partners sharing a level with projector l
    bool ranks_valid = false;                       ///< every projector has 1 < r < d
    bool ok = false;                                ///< full coverage and every projector overlaps a partner

    std::size_t min_coverage() const {
        return coverage.empty() ? 0 : *std::min_element(coverage.begin(), coverage.end());
    }
};

inline ValidationReport validate_set(const ProjectorFamily& family) {
    ValidationReport report;
    const std::size_t n = family.size();
    report.coverage.assign(family.dim, 0);
    report.overlap.assign(n, {});
    report.ranks_valid = n > 0;
    bool dims_match = true;

    for (const auto& p : family.projectors) {
        if (p.dim() != family.dim) {
            dims_match = false;
            continue;
        }
        if (p.rank() <= 1 || p.rank() >= family.dim) report.ranks_valid = false;
        for (auto k : p.support()) ++report.coverage[k];
    }
    if (!dims_match) return report;

    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            const auto& pa = family.projectors[a];
            const bool shares = std::any_of(pa.support().begin(), pa.support().end(),
                                            [&](std::size_t k) { return family.projectors[b].contains(k); });
            if (shares) report.overlap[a].push_back(b);
        }

    const bool covered = family.dim > 0 && report.min_coverage() >= 1;
    const bool linked = n > 0 && std::all_of(report.overlap.begin(), report.overlap.end(),
                                             [](const auto& partners) { return !partners.empty(); });
    report.ok = covered && linked;
    return report;
}

/// P|psi>, unnormalized.
inline StateVector apply(const RankProjector& p, const StateVector& psi) {
    if (psi.dim() != p.dim()) throw DimensionMismatch(p.dim(), psi.dim());
    StateVector out(psi.dim());
    for (auto k : p.support()) out[k] = psi[k];
    return out;
}

// JSON sidecar: {"dim": d, "kind": "FamilyII", "projectors": [{"shift": s, "support": [...]}, ...]}

inline nlohmann::json family_to_json(const ProjectorFamily& family) {
    nlohmann::json projectors = nlohmann::json::array();
    for (const auto& p : family.projectors)
        projectors.push_back({{"shift", p.shift()}, {"support", p.support()}});
    return {{"dim", family.dim}, {"kind", to_string(family.kind)}, {"projectors", projectors}};
}

inline ProjectorFamily family_from_json(const nlohmann::json& doc) {
    try {
        const auto dim = doc.at("dim").get<std::size_t>();
        const auto kind = parse_family_kind(doc.at("kind").get<std::string>());
        ProjectorFamily family{dim, kind, {}};
        for (const auto& p : doc.at("projectors")) {
            auto support = p.at("support").get<std::vector<std::size_t>>();
            const auto shift = p.contains("shift") ? p.at("shift").get<std::size_t>() : std::size_t{0};
            family.projectors.emplace_back(dim, std::move(support), shift);
        }
        if (kind != FamilyKind::Custom && family != build_family(dim, kind))
            throw InvalidArgument("supports do not match the declared " + to_string(kind));
        return family;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed projector family JSON: ") + e.what());
    }
}

}  // namespace qptycho
