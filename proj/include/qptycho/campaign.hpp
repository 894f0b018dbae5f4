// campaign.hpp
// Monte Carlo fidelity campaigns: Haar-random sources, simulated data under a
// chosen noise model, PIE reconstruction, and tidy CSV/JSON output.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "error.hpp"
#include "forward_model.hpp"
#include "hilbert.hpp"
#include "json.hpp"
#include "optics.hpp"
#include "pie.hpp"
#include "projectors.hpp"

namespace qptycho {

enum class NoiseMode { None, Shot, Purity, Envelope };

/// Exactly one degradation source per campaign.
struct NoiseSpec {
    NoiseMode mode = NoiseMode::None;
    double exposure = 1e5;  ///< mean photons per projector preparation (Shot)
    double weight = 1.0;    ///< p in p|psi><psi| + (1-p) I/d (Purity)

    static NoiseSpec none() { return {}; }
    static NoiseSpec shot(double exposure) { return {NoiseMode::Shot, exposure, 1.0}; }
    static NoiseSpec purity(double p) { return {NoiseMode::Purity, 1e5, p}; }
    static NoiseSpec envelope() { return {NoiseMode::Envelope, 1e5, 1.0}; }

    void validate() const {
        if (mode == NoiseMode::Shot && !(exposure > 0.0)) throw InvalidArgument("shot noise needs a positive exposure");
        if (mode == NoiseMode::Purity && !(weight > 0.0 && weight <= 1.0))
            throw InvalidArgument("mixing weight must lie in (0, 1]");
    }
};

inline std::string to_string(NoiseMode mode) {
    switch (mode) {
        case NoiseMode::None: return "none";
        case NoiseMode::Shot: return "shot";
        case NoiseMode::Purity: return "purity";
        case NoiseMode::Envelope: return "envelope";
    }
    return "none";
}

inline NoiseMode parse_noise_mode(std::string_view name) {
    if (name == "none") return NoiseMode::None;
    if (name == "shot") return NoiseMode::Shot;
    if (name == "purity") return NoiseMode::Purity;
    if (name == "envelope") return NoiseMode::Envelope;
    throw InvalidArgument("unknown noise mode '" + std::string(name) + "'");
}

/// 100 states for d <= 10, 50 for 11 <= d <= 17, 13 beyond.
inline std::size_t preset_trials(std::size_t dim) {
    if (dim <= 10) return 100;
    if (dim <= 17) return 50;
    return 13;
}

struct CampaignConfig {
    std::vector<std::size_t> dims;
    std::vector<FamilyKind> families{FamilyKind::FamilyII};
    std::optional<std::size_t> trials_per_dim;  ///< empty selects the per-dimension preset
    NoiseSpec noise;
    std::uint64_t master_seed = 0;
    PieConfig pie;
    std::string output;  ///< directory for results.csv / summary.json; empty writes nothing
    std::size_t threads = 1;
    bool svg = false;

    std::size_t trials_for(std::size_t dim) const { return trials_per_dim ? *trials_per_dim : preset_trials(dim); }

    void validate() const {
        if (dims.empty()) throw InvalidArgument("campaign needs at least one dimension");
        for (auto d : dims)
            if (d < 3 || d > 64) throw InvalidArgument("campaign dimensions must lie in [3, 64]");
        if (families.empty()) throw InvalidArgument("campaign needs at least one projector family");
        for (auto f : families)
            if (f == FamilyKind::Custom) throw InvalidArgument("campaigns support FamilyI and FamilyII only");
        if (trials_per_dim && *trials_per_dim < 1) throw InvalidArgument("trials must be at least 1");
        noise.validate();
        pie.validate();
    }
};

struct TrialRecord {
    std::size_t d = 0;
    FamilyKind family = FamilyKind::FamilyII;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double fidelity = 0.0;
    bool converged = false;
    std::size_t sweeps = 0;
    std::size_t restarts = 0;
    double t_pie_ms = 0.0;
};

struct CellSummary {
    std::size_t d = 0;
    FamilyKind family = FamilyKind::FamilyII;
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;
    double convergence_rate = 0.0;
    double mean_t_pie_ms = 0.0;
};

/// log t = exponent * log d + intercept, least squares.
struct PowerLawFit {
    double exponent = 0.0;
    double intercept = 0.0;
};

struct CampaignResult {
    std::vector<TrialRecord> records;
    std::vector<CellSummary> cells;
    std::optional<PowerLawFit> timing_fit;  ///< family (ii) only
};

// Random streams used inside one trial.
inline constexpr std::uint64_t kSourceStream = 0;
inline constexpr std::uint64_t kNoiseStream = 2;

/// Simulated dataset for a known source under the requested noise model.
inline PtychographicDataset simulate_dataset(const StateVector& source, const ProjectorFamily& family,
                                             const NoiseSpec& noise, std::uint64_t seed) {
    noise.validate();
    switch (noise.mode) {
        case NoiseMode::None:
            return assemble_dataset(ideal_probabilities(source, family), family, Provenance::exact());
        case NoiseMode::Shot: {
            Rng rng = make_rng(seed, kNoiseStream);
            const auto counts = sample_counts(ideal_probabilities(source, family), noise.exposure, rng);
            return assemble_dataset(counts, family, Provenance::sampled(seed, noise.exposure));
        }
        case NoiseMode::Purity:
            return assemble_dataset(white_noise_probabilities(source, noise.weight, family), family,
                                    Provenance::exact());
        case NoiseMode::Envelope:
            return assemble_dataset(
                detector_probabilities(source, family, laboratory_geometry(source.dim()), Envelope::On), family,
                Provenance::exact());
    }
    throw InvalidArgument("unknown noise mode");
}

inline TrialRecord run_trial(std::size_t dim, FamilyKind kind, const NoiseSpec& noise, std::uint64_t seed,
                             PieConfig pie = {}) {
    Rng source_rng = make_rng(seed, kSourceStream);
    const StateVector source = haar_random_state(dim, source_rng);
    const ProjectorFamily family = build_family(dim, kind);
    const PtychographicDataset data = simulate_dataset(source, family, noise, seed);
    pie.seed = seed;
    const auto result = reconstruct(data, family, pie);

    TrialRecord rec;
    rec.d = dim;
    rec.family = kind;
    rec.seed = seed;
    rec.fidelity = fidelity(result.estimate, source);
    rec.converged = result.converged;
    rec.sweeps = result.sweeps_used;
    rec.restarts = result.restarts_used;
    rec.t_pie_ms = std::chrono::duration<double, std::milli>(result.wall_time).count();
    return rec;
}

struct ParallelOutcome {
    std::vector<char> done;       ///< per-index completion flags
    std::exception_ptr error;     ///< first failure by index, if any

    void rethrow_if_failed() const {
        if (error) std::rethrow_exception(error);
    }
};

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Every index runs
/// even if another throws.
inline ParallelOutcome parallel_for(std::size_t count, std::size_t threads,
                                    const std::function<void(std::size_t)>& fn) {
    ParallelOutcome outcome{std::vector<char>(count, 0), nullptr};
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
                outcome.done[i] = 1;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, count));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) {
            outcome.error = e;
            break;
        }
    return outcome;
}

// ---------------------------------------------------------------------------
// statistics

/// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, 0.5);
}

inline double mean(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

inline PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("power-law fit needs at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) throw InvalidArgument("power-law fit needs positive data");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw InvalidArgument("power-law fit needs distinct abscissae");
    PowerLawFit fit;
    fit.exponent = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.exponent * sx) / n;
    return fit;
}

inline std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records) {
    std::vector<CellSummary> cells;
    std::vector<std::pair<std::size_t, FamilyKind>> keys;
    for (const auto& r : records)
        if (std::find(keys.begin(), keys.end(), std::pair{r.d, r.family}) == keys.end())
            keys.emplace_back(r.d, r.family);
    for (const auto& [d, family] : keys) {
        std::vector<double> f, t;
        std::size_t converged = 0;
        for (const auto& r : records)
            if (r.d == d && r.family == family) {
                f.push_back(r.fidelity);
                t.push_back(r.t_pie_ms);
                converged += r.converged ? 1 : 0;
            }
        std::sort(f.begin(), f.end());
        CellSummary c;
        c.d = d;
        c.family = family;
        c.count = f.size();
        c.mean = mean(f);
        c.median = quantile_sorted(f, 0.5);
        c.q1 = quantile_sorted(f, 0.25);
        c.q3 = quantile_sorted(f, 0.75);
        c.min = f.front();
        c.max = f.back();
        c.convergence_rate = static_cast<double>(converged) / static_cast<double>(f.size());
        c.mean_t_pie_ms = mean(t);
        cells.push_back(c);
    }
    return cells;
}

inline std::optional<PowerLawFit> timing_fit(const std::vector<CellSummary>& cells, FamilyKind family = FamilyKind::FamilyII) {
    std::vector<double> x, y;
    for (const auto& c : cells)
        if (c.family == family && c.mean_t_pie_ms > 0.0) {
            x.push_back(static_cast<double>(c.d));
            y.push_back(c.mean_t_pie_ms);
        }
    std::vector<double> distinct = x;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) return std::nullopt;
    return fit_power_law(x, y);
}

// ---------------------------------------------------------------------------
// output

inline constexpr const char* kResultsHeader = "d,family,trial,seed,fidelity,converged,sweeps,restarts,t_pie_ms";

inline void write_results_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
    out << kResultsHeader << '\n';
    for (const auto& r : records)
        out << r.d << ',' << to_string(r.family) << ',' << r.trial << ',' << r.seed << ',' << format_double(r.fidelity)
            << ',' << (r.converged ? 1 : 0) << ',' << r.sweeps << ',' << r.restarts << ','
            << format_double(r.t_pie_ms) << '\n';
}

inline std::vector<TrialRecord> read_results_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || detail::trim(line) != kResultsHeader)
        throw ParseError(1, "expected results header '" + std::string(kResultsHeader) + "'");
    std::vector<TrialRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 9) throw ParseError(line_no, "expected 9 columns");
        try {
            TrialRecord r;
            r.d = std::stoul(cells[0]);
            r.family = parse_family_kind(cells[1]);
            r.trial = std::stoul(cells[2]);
            r.seed = std::stoull(cells[3]);
            if (!detail::parse_number(cells[4], r.fidelity)) throw InvalidArgument("bad fidelity");
            r.converged = cells[5] == "1";
            r.sweeps = std::stoul(cells[6]);
            r.restarts = std::stoul(cells[7]);
            if (!detail::parse_number(cells[8], r.t_pie_ms)) throw InvalidArgument("bad time");
            records.push_back(r);
        } catch (const std::exception& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return records;
}

inline nlohmann::json summary_to_json(const CampaignResult& result, const CampaignConfig& config) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : result.cells)
        cells.push_back({{"d", c.d},
                         {"family", to_string(c.family)},
                         {"count", c.count},
                         {"mean", c.mean},
                         {"median", c.median},
                         {"q1", c.q1},
                         {"q3", c.q3},
                         {"min", c.min},
                         {"max", c.max},
                         {"convergence_rate", c.convergence_rate},
                         {"mean_t_pie_ms", c.mean_t_pie_ms}});
    nlohmann::json doc{{"master_seed", config.master_seed},
                       {"noise", to_string(config.noise.mode)},
                       {"cells", cells}};
    if (result.timing_fit)
        doc["timing_fit"] = {{"family", "FamilyII"},
                             {"exponent", result.timing_fit->exponent},
                             {"intercept", result.timing_fit->intercept}};
    return doc;
}

/// Fidelity histogram over [0, 1] as a standalone SVG.
inline void write_svg_histogram(std::ostream& out, const std::vector<double>& fidelities, const std::string& title,
                                std::size_t bins = 20) {
    std::vector<std::size_t> counts(bins, 0);
    for (double f : fidelities) {
        const auto b = std::min(bins - 1, static_cast<std::size_t>(std::clamp(f, 0.0, 1.0) * static_cast<double>(bins)));
        ++counts[b];
    }
    const std::size_t peak = std::max<std::size_t>(1, *std::max_element(counts.begin(), counts.end()));
    constexpr double width = 400, height = 200, margin = 30;
    const double bar = (width - 2 * margin) / static_cast<double>(bins);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height + margin
        << "\">\n<text x=\"" << margin << "\" y=\"18\" font-size=\"12\">" << title << "</text>\n";
    for (std::size_t b = 0; b < bins; ++b) {
        const double h = (height - margin) * static_cast<double>(counts[b]) / static_cast<double>(peak);
        out << "<rect x=\"" << margin + bar * static_cast<double>(b) << "\" y=\"" << height - h << "\" width=\""
            << bar * 0.9 << "\" height=\"" << h << "\" fill=\"#b22222\"/>\n";
    }
    out << "<text x=\"" << margin << "\" y=\"" << height + 15 << "\" font-size=\"10\">F=0</text>\n"
        << "<text x=\"" << width - margin - 20 << "\" y=\"" << height + 15 << "\" font-size=\"10\">F=1</text>\n"
        << "</svg>\n";
}

namespace detail {

inline void write_campaign_files(const CampaignResult& result, const CampaignConfig& config) {
    if (config.output.empty()) return;
    const std::filesystem::path dir(config.output);
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(dir / "results.csv");
        if (!csv) throw Error("cannot write " + (dir / "results.csv").string());
        write_results_csv(csv, result.records);
        if (!csv) throw Error("failed writing " + (dir / "results.csv").string());
    }
    std::ofstream js(dir / "summary.json");
    if (!js) throw Error("cannot write " + (dir / "summary.json").string());
    js << summary_to_json(result, config).dump(2) << '\n';
    if (config.svg)
        for (const auto& cell : result.cells) {
            std::vector<double> f;
            for (const auto& r : result.records)
                if (r.d == cell.d && r.family == cell.family) f.push_back(r.fidelity);
            std::ofstream svg(dir / ("hist_d" + std::to_string(cell.d) + "_" + to_string(cell.family) + ".svg"));
            write_svg_histogram(svg, f, "d=" + std::to_string(cell.d) + " " + to_string(cell.family));
        }
}

}  // namespace detail

/// Executes every (d, family, trial) cell. Trial t of every cell uses seed
/// master_seed + t, so per-trial results do not depend on thread count and
/// both families see the same source states. Family (i) cells with d < 5 are
/// skipped. On a trial failure the completed records are written before the
/// error propagates.
inline CampaignResult run_campaign(const CampaignConfig& config) {
    config.validate();
    std::vector<TrialRecord> plan;
    for (auto d : config.dims)
        for (auto family : config.families) {
            if (family == FamilyKind::FamilyI && d < 5) continue;
            for (std::size_t t = 0; t < config.trials_for(d); ++t) {
                TrialRecord r;
                r.d = d;
                r.family = family;
                r.trial = t;
                r.seed = config.master_seed + t;
                plan.push_back(r);
            }
        }

    const auto outcome = parallel_for(plan.size(), config.threads, [&](std::size_t i) {
        const auto rec = run_trial(plan[i].d, plan[i].family, config.noise, plan[i].seed, config.pie);
        plan[i].fidelity = rec.fidelity;
        plan[i].converged = rec.converged;
        plan[i].sweeps = rec.sweeps;
        plan[i].restarts = rec.restarts;
        plan[i].t_pie_ms = rec.t_pie_ms;
    });

    CampaignResult result;
    for (std::size_t i = 0; i < plan.size(); ++i)
        if (outcome.done[i]) result.records.push_back(plan[i]);
    if (!result.records.empty()) {
        result.cells = summarize(result.records);
        result.timing_fit = timing_fit(result.cells);
    }
    detail::write_campaign_files(result, config);
    outcome.rethrow_if_failed();
    return result;
}

struct PurityPoint {
    double weight = 1.0;  ///< p
    double purity = 1.0;  ///< Tr(rho^2)
    double mean_fidelity = 0.0;
    double convergence_rate = 0.0;
    std::size_t trials = 0;
};

/// Mean fidelity against the pure component and convergence rate as the
/// white-noise weight varies. Trial t uses seed + t at every p.
inline std::vector<PurityPoint> purity_sweep(std::size_t dim, FamilyKind kind, const std::vector<double>& weights,
                                             std::size_t trials, std::uint64_t seed, const PieConfig& pie = {},
                                             std::size_t threads = 1) {
    if (trials < 1) throw InvalidArgument("purity sweep needs at least one trial");
    std::vector<PurityPoint> out;
    for (double p : weights) {
        if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("mixing weights must lie in (0, 1]");
        std::vector<TrialRecord> recs(trials);
        parallel_for(trials, threads, [&](std::size_t t) {
            recs[t] = run_trial(dim, kind, NoiseSpec::purity(p), seed + t, pie);
        }).rethrow_if_failed();
        PurityPoint pt;
        pt.weight = p;
        pt.purity = white_noise_purity(p, dim);
        pt.trials = trials;
        std::vector<double> f;
        std::size_t converged = 0;
        for (const auto& r : recs) {
            f.push_back(r.fidelity);
            converged += r.converged ? 1 : 0;
        }
        pt.mean_fidelity = mean(f);
        pt.convergence_rate = static_cast<double>(converged) / static_cast<double>(trials);
        out.push_back(pt);
    }
    return out;
}

inline void write_purity_csv(std::ostream& out, const std::vector<PurityPoint>& points) {
    out << "p,purity,mean_fidelity,convergence_rate,trials\n";
    for (const auto& p : points)
        out << format_double(p.weight) << ',' << format_double(p.purity) << ',' << format_double(p.mean_fidelity)
            << ',' << format_double(p.convergence_rate) << ',' << p.trials << '\n';
}

// ---------------------------------------------------------------------------
// JSON documents

inline PieConfig pie_config_from_json(const nlohmann::json& doc, PieConfig base = {}) {
    if (doc.contains("beta")) base.beta = doc.at("beta").get<double>();
    if (doc.contains("distance_tolerance")) base.distance_tolerance = doc.at("distance_tolerance").get<double>();
    if (doc.contains("max_sweeps")) base.max_sweeps = doc.at("max_sweeps").get<std::size_t>();
    if (doc.contains("max_restarts")) base.max_restarts = doc.at("max_restarts").get<std::size_t>();
    if (doc.contains("seed")) base.seed = doc.at("seed").get<std::uint64_t>();
    base.validate();
    return base;
}

inline NoiseSpec noise_from_json(const nlohmann::json& doc) {
    NoiseSpec spec;
    if (doc.is_string()) {
        spec.mode = parse_noise_mode(doc.get<std::string>());
    } else {
        spec.mode = parse_noise_mode(doc.at("mode").get<std::string>());
        if (doc.contains("exposure")) spec.exposure = doc.at("exposure").get<double>();
        if (doc.contains("p")) spec.weight = doc.at("p").get<double>();
    }
    spec.validate();
    return spec;
}

/// {"dims": [3, 4] | {"from": 3, "to": 10}, "families": ["FamilyII"],
///  "trials": 20 | "preset", "noise": {"mode": "shot", "exposure": 1e5},
///  "master_seed": 1, "pie": {...}, "output": "out", "threads": 4, "svg": false}
inline CampaignConfig campaign_config_from_json(const nlohmann::json& doc) {
    try {
        CampaignConfig cfg;
        const auto& dims = doc.at("dims");
        if (dims.is_object()) {
            const auto from = dims.at("from").get<std::size_t>();
            const auto to = dims.at("to").get<std::size_t>();
            for (auto d = from; d <= to; ++d) cfg.dims.push_back(d);
        } else {
            cfg.dims = dims.get<std::vector<std::size_t>>();
        }
        if (doc.contains("families")) {
            cfg.families.clear();
            for (const auto& f : doc.at("families")) cfg.families.push_back(parse_family_kind(f.get<std::string>()));
        }
        if (doc.contains("trials")) {
            const auto& t = doc.at("trials");
            if (t.is_string()) {
                if (t.get<std::string>() != "preset") throw InvalidArgument("trials must be an integer or \"preset\"");
                cfg.trials_per_dim.reset();
            } else {
                cfg.trials_per_dim = t.get<std::size_t>();
            }
        } else {
            cfg.trials_per_dim.reset();
        }
        if (doc.contains("noise")) cfg.noise = noise_from_json(doc.at("noise"));
        if (doc.contains("master_seed")) cfg.master_seed = doc.at("master_seed").get<std::uint64_t>();
        if (doc.contains("pie")) cfg.pie = pie_config_from_json(doc.at("pie"));
        if (doc.contains("output")) cfg.output = doc.at("output").get<std::string>();
        if (doc.contains("threads")) cfg.threads = doc.at("threads").get<std::size_t>();
        if (doc.contains("svg")) cfg.svg = doc.at("svg").get<bool>();
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed campaign config: ") + e.what());
    }
}

/// {"dim": d, "amplitudes": [[re, im], ...]}
inline nlohmann::json state_to_json(const StateVector& psi) {
    nlohmann::json amps = nlohmann::json::array();
    for (const auto& c : psi.amplitudes()) amps.push_back({c.real(), c.imag()});
    return {{"dim", psi.dim()}, {"amplitudes", amps}};
}

inline StateVector state_from_json(const nlohmann::json& doc) {
    try {
        const auto dim = doc.at("dim").get<std::size_t>();
        std::vector<Complex> amps;
        for (const auto& a : doc.at("amplitudes")) {
            if (!a.is_array() || a.size() != 2) throw InvalidArgument("amplitude entries must be [re, im] pairs");
            amps.emplace_back(a[0].get<double>(), a[1].get<double>());
        }
        if (amps.size() != dim) throw DimensionMismatch(dim, amps.size());
        return StateVector(std::move(amps));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed state JSON: ") + e.what());
    }
}

}  // namespace qptycho
