// qptycho: command-line driver for simulation, reconstruction and campaigns.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qptycho/qptycho.hpp"

namespace {

using namespace qptycho;
using nlohmann::json;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::string output;
    std::optional<std::size_t> threads;
    std::string config;
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(path + ": " + e.what());
    }
}

// Writes to `path`, or stdout when it is empty.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty()) {
        fn(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    fn(out);
    if (!out) throw Error("failed writing " + path);
}

std::uint64_t seed_or(const GlobalOptions& g, std::uint64_t fallback) { return g.seed ? *g.seed : fallback; }

StateVector load_or_draw_state(const std::string& state_path, std::size_t dim, std::uint64_t seed) {
    if (!state_path.empty()) return state_from_json(read_json_file(state_path));
    if (dim == 0) throw InvalidArgument("either --state or --dim is required");
    Rng rng = make_rng(seed, kSourceStream);
    return haar_random_state(dim, rng);
}

ProjectorFamily load_family(const std::string& family_json, const std::string& kind, std::size_t dim) {
    if (!family_json.empty()) return family_from_json(read_json_file(family_json));
    return build_family(dim, parse_family_kind(kind));
}

PieConfig pie_from_config(const GlobalOptions& g) {
    if (g.config.empty()) return {};
    const auto doc = read_json_file(g.config);
    return pie_config_from_json(doc.contains("pie") ? doc.at("pie") : doc);
}

struct PieOverrides {
    std::optional<double> beta;
    std::optional<double> tolerance;
    std::optional<std::size_t> max_sweeps;
    std::optional<std::size_t> max_restarts;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--beta", beta, "PIE step size (default 1.6)");
        cmd->add_option("--tolerance", tolerance, "Stopping threshold on D (default 1e-2)");
        cmd->add_option("--max-sweeps", max_sweeps, "Sweeps per attempt (default 25)");
        cmd->add_option("--max-restarts", max_restarts, "Random restarts (default 100)");
    }

    PieConfig apply(PieConfig cfg) const {
        if (beta) cfg.beta = *beta;
        if (tolerance) cfg.distance_tolerance = *tolerance;
        if (max_sweeps) cfg.max_sweeps = *max_sweeps;
        if (max_restarts) cfg.max_restarts = *max_restarts;
        cfg.validate();
        return cfg;
    }
};

NoiseSpec make_noise(const std::string& mode, double exposure, double p) {
    NoiseSpec spec;
    spec.mode = parse_noise_mode(mode);
    spec.exposure = exposure;
    spec.weight = p;
    spec.validate();
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum state ptychography: simulate, reconstruct and benchmark pure-state PIE tomography"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Master random seed");
    app.add_option("--output,-o", g.output, "Output file (or directory for campaign)");
    app.add_option("--threads", g.threads, "Worker threads for campaigns and sweeps");
    app.add_option("--config", g.config, "JSON configuration file");

    // generate
    auto* generate = app.add_subcommand("generate", "Emit a Haar-random state as JSON");
    std::size_t gen_dim = 0;
    generate->add_option("--dim,-d", gen_dim, "Hilbert-space dimension")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Simulate a ptychographic dataset CSV");
    std::string sim_state, sim_family = "FamilyII", sim_family_json, sim_noise = "none", sim_family_out,
                sim_state_out;
    std::size_t sim_dim = 0;
    double sim_exposure = 1e5, sim_p = 1.0;
    simulate->add_option("--state", sim_state, "Source state JSON (default: Haar-random)");
    simulate->add_option("--dim,-d", sim_dim, "Dimension when drawing a random source");
    simulate->add_option("--family", sim_family, "FamilyI or FamilyII");
    simulate->add_option("--family-json", sim_family_json, "Explicit projector family JSON");
    simulate->add_option("--noise", sim_noise, "none | shot | purity | envelope")
        ->check(CLI::IsMember({"none", "shot", "purity", "envelope"}));
    simulate->add_option("--exposure", sim_exposure, "Mean photons per projector (shot noise)");
    simulate->add_option("--p", sim_p, "Pure-state weight of the white-noise mixture (purity)");
    simulate->add_option("--family-out", sim_family_out, "Write the projector family JSON sidecar");
    simulate->add_option("--state-out", sim_state_out, "Write the source state JSON");

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "Reconstruct a state from a dataset CSV");
    std::string rec_input, rec_family_json, rec_reference;
    std::optional<double> rec_calibration;
    PieOverrides rec_pie;
    rec->add_option("--input,-i", rec_input, "Dataset CSV")->required();
    rec->add_option("--family-json", rec_family_json, "Projector family JSON (required for Custom)");
    rec->add_option("--reference", rec_reference, "Reference state JSON for the fidelity");
    rec->add_option("--calibration", rec_calibration, "Global intensity calibration constant");
    rec_pie.add_to(rec);

    // campaign
    auto* campaign = app.add_subcommand("campaign", "Run a fidelity campaign from --config");

    // purity-sweep
    auto* sweep = app.add_subcommand("purity-sweep", "Fidelity and convergence versus state purity");
    std::size_t sweep_dim = 6, sweep_trials = 30;
    std::string sweep_family = "FamilyII";
    std::vector<double> sweep_p{1.0, 0.97, 0.95, 0.9, 0.8, 0.7, 0.6, 0.5, 0.3};
    PieOverrides sweep_pie;
    sweep->add_option("--dim,-d", sweep_dim, "Dimension");
    sweep->add_option("--family", sweep_family, "FamilyI or FamilyII");
    sweep->add_option("--p", sweep_p, "Pure-state weights")->delimiter(',');
    sweep->add_option("--trials", sweep_trials, "Trials per weight");
    sweep_pie.add_to(sweep);

    // optics-profile
    auto* optics = app.add_subcommand("optics-profile", "Near/far-field intensity profiles as CSV");
    std::string opt_state, opt_family = "FamilyII";
    std::size_t opt_dim = 0, opt_points = 2001;
    std::optional<double> opt_lambda, opt_focal, opt_pitch, opt_width;
    optics->add_option("--state", opt_state, "State JSON (default: Haar-random)");
    optics->add_option("--dim,-d", opt_dim, "Dimension when drawing a random state");
    optics->add_option("--family", opt_family, "Family whose slices are profiled");
    optics->add_option("--points", opt_points, "Samples per profile");
    optics->add_option("--wavelength", opt_lambda, "Wavelength [m]");
    optics->add_option("--focal-length", opt_focal, "Lens focal length [m]");
    optics->add_option("--pitch", opt_pitch, "Slit center-to-center pitch [m]");
    optics->add_option("--slit-width", opt_width, "Slit width [m]");

    // validate-family
    auto* validate = app.add_subcommand("validate-family", "Check coverage and overlap of a projector family");
    std::size_t val_dim = 0;
    std::string val_family = "FamilyII", val_family_json;
    validate->add_option("--dim,-d", val_dim, "Dimension");
    validate->add_option("--family", val_family, "FamilyI or FamilyII");
    validate->add_option("--family-json", val_family_json, "Explicit projector family JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*generate) {
            Rng rng = make_rng(seed_or(g, 0), kSourceStream);
            const auto psi = haar_random_state(gen_dim, rng);
            with_output(g.output, [&](std::ostream& out) { out << state_to_json(psi).dump(2) << '\n'; });
        } else if (*simulate) {
            const std::uint64_t seed = seed_or(g, 0);
            const auto psi = load_or_draw_state(sim_state, sim_dim, seed);
            const auto family = load_family(sim_family_json, sim_family, psi.dim());
            const auto data = simulate_dataset(psi, family, make_noise(sim_noise, sim_exposure, sim_p), seed);
            with_output(g.output, [&](std::ostream& out) { export_csv(data, out); });
            if (!sim_family_out.empty())
                with_output(sim_family_out, [&](std::ostream& out) { out << family_to_json(family).dump(2) << '\n'; });
            if (!sim_state_out.empty())
                with_output(sim_state_out, [&](std::ostream& out) { out << state_to_json(psi).dump(2) << '\n'; });
        } else if (*rec) {
            std::ifstream in(rec_input);
            if (!in) throw Error("cannot open " + rec_input);
            IngestOptions opts;
            opts.source_id = rec_input;
            opts.calibration = rec_calibration;
            if (!rec_family_json.empty()) opts.family = family_from_json(read_json_file(rec_family_json));
            const auto data = ingest_csv(in, opts);
            PieConfig pie = rec_pie.apply(pie_from_config(g));
            pie.seed = seed_or(g, pie.seed);
            const auto result = reconstruct(data, data.family, pie);
            std::cout << "d=" << data.dim() << " n=" << data.n() << " converged=" << (result.converged ? "yes" : "no")
                      << " sweeps=" << result.sweeps_used << " restarts=" << result.restarts_used
                      << " D=" << result.final_distance << " residual=" << result.residual
                      << " t_pie_ms=" << std::chrono::duration<double, std::milli>(result.wall_time).count() << '\n';
            if (data.clamped_count) std::cout << "clamped_negative=" << data.clamped_count << '\n';
            if (!rec_reference.empty()) {
                const auto reference = state_from_json(read_json_file(rec_reference)).normalized();
                std::cout << "fidelity=" << format_double(fidelity(result.estimate, reference)) << '\n';
            }
            if (!g.output.empty())
                with_output(g.output, [&](std::ostream& out) { out << state_to_json(result.estimate).dump(2) << '\n'; });
        } else if (*campaign) {
            if (g.config.empty()) throw InvalidArgument("campaign requires --config <path>");
            auto cfg = campaign_config_from_json(read_json_file(g.config));
            if (!g.output.empty()) cfg.output = g.output;
            if (g.threads) cfg.threads = *g.threads;
            if (g.seed) cfg.master_seed = *g.seed;
            const auto result = run_campaign(cfg);
            std::cout << "d,family,count,mean,median,min,convergence_rate,mean_t_pie_ms\n";
            for (const auto& c : result.cells)
                std::cout << c.d << ',' << to_string(c.family) << ',' << c.count << ',' << c.mean << ',' << c.median
                          << ',' << c.min << ',' << c.convergence_rate << ',' << c.mean_t_pie_ms << '\n';
            if (result.timing_fit) std::cout << "timing exponent (FamilyII): " << result.timing_fit->exponent << '\n';
            if (!cfg.output.empty()) std::cout << "wrote " << cfg.output << "/results.csv and summary.json\n";
        } else if (*sweep) {
            PieConfig pie = sweep_pie.apply(pie_from_config(g));
            const auto points = purity_sweep(sweep_dim, parse_family_kind(sweep_family), sweep_p, sweep_trials,
                                             seed_or(g, 0), pie, g.threads.value_or(1));
            with_output(g.output, [&](std::ostream& out) { write_purity_csv(out, points); });
        } else if (*optics) {
            if (g.output.empty()) throw InvalidArgument("optics-profile requires --output <prefix>");
            const auto psi = load_or_draw_state(opt_state, opt_dim, seed_or(g, 0)).normalized();
            OpticalGeometry geom = laboratory_geometry(psi.dim());
            if (opt_lambda) geom.wavelength = *opt_lambda;
            if (opt_focal) geom.focal_length = *opt_focal;
            if (opt_pitch) geom.pitch = *opt_pitch;
            if (opt_width) geom.slit_width = *opt_width;
            geom.validate();
            const auto family = build_family(psi.dim(), parse_family_kind(opt_family));

            std::vector<std::pair<std::string, StateVector>> states{{"psi", psi}};
            for (std::size_t l = 0; l < family.size(); ++l)
                states.emplace_back("psi_" + std::to_string(l), apply(family[l], psi));

            const double near_lo = -geom.pitch, near_hi = static_cast<double>(psi.dim()) * geom.pitch;
            const double far_edge = geom.wavelength * geom.focal_length / geom.slit_width;
            const auto layout = detector_positions(geom);
            with_output(g.output + "_near.csv", [&](std::ostream& out) {
                out << "state,x,intensity\n";
                for (const auto& [name, s] : states)
                    for (const auto& p : sample_profile([&](double x) { return near_field_intensity(s, geom, x); },
                                                        near_lo, near_hi, opt_points))
                        out << name << ',' << format_double(p.x) << ',' << format_double(p.intensity) << '\n';
            });
            with_output(g.output + "_far.csv", [&](std::ostream& out) {
                out << "state,x,intensity\n";
                for (const auto& [name, s] : states)
                    for (const auto& p : sample_profile([&](double x) { return far_field_intensity(s, geom, x); },
                                                        -far_edge, far_edge, opt_points))
                        out << name << ',' << format_double(p.x) << ',' << format_double(p.intensity) << '\n';
            });
            with_output(g.output + "_detectors.csv", [&](std::ostream& out) {
                out << "state,j,mu,x,intensity\n";
                for (const auto& [name, s] : states) {
                    const auto samples = sample_at_detectors(s, geom, Envelope::On);
                    for (std::size_t j = 0; j < psi.dim(); ++j)
                        out << name << ',' << j << ',' << layout.index_map[j] << ','
                            << format_double(layout.positions[j]) << ',' << format_double(samples[j]) << '\n';
                }
            });
            std::cout << "envelope contrast min/max at detectors: " << envelope_contrast(geom) << '\n';
        } else if (*validate) {
            const auto family = val_family_json.empty() ? build_family(val_dim, parse_family_kind(val_family))
                                                        : family_from_json(read_json_file(val_family_json));
            const auto report = validate_set(family);
            std::cout << "family=" << to_string(family.kind) << " d=" << family.dim << " n=" << family.size() << '\n';
            std::cout << "coverage:";
            for (auto m : report.coverage) std::cout << ' ' << m;
            std::cout << '\n';
            const bool uniform = std::all_of(report.coverage.begin(), report.coverage.end(),
                                             [&](std::size_t m) { return m == report.coverage.front(); });
            if (uniform) std::cout << "coverage=" << report.coverage.front() << " per level\n";
            for (std::size_t l = 0; l < family.size(); ++l) {
                std::cout << "P" << l << " support={";
                for (std::size_t i = 0; i < family[l].support().size(); ++i)
                    std::cout << (i ? "," : "") << family[l].support()[i];
                std::cout << "} partners=" << report.overlap[l].size() << '\n';
            }
            if (!report.ranks_valid) std::cout << "warning: some projector rank is outside (1, d)\n";
            std::cout << (report.ok ? "ok" : "FAILED") << '\n';
            return report.ok ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
