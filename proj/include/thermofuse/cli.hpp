#pragma once

// Command-line front end. run() takes the argument list and output streams
// so the tool can be driven in-process by tests.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "thermofuse/core.hpp"
#include "thermofuse/fuse.hpp"
#include "thermofuse/io.hpp"
#include "thermofuse/metrics.hpp"
#include "thermofuse/optics.hpp"
#include "thermofuse/select.hpp"

namespace thermofuse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline std::string format_scalar(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct FusionFlags {
    FusionConfig cfg;
    unsigned jobs = 0;

    void attach(CLI::App& cmd) {
        cmd.add_option("--window", cfg.window, "Activity window size (odd, >= 3)")->capture_default_str();
        cmd.add_option("--frames-per-peak", cfg.frames_per_peak, "Frames kept around each peak")
            ->capture_default_str();
        cmd.add_option("--peak-sep", cfg.peak_min_separation, "Minimum peak separation in frames")
            ->capture_default_str();
        cmd.add_option("--peak-thresh", cfg.peak_threshold_frac, "Peak threshold as a fraction of the global max")
            ->capture_default_str();
        cmd.add_option("--jobs", jobs, "Worker threads for activity (0 = all cores)")->capture_default_str();
    }
};

// A .pgm file is read as pgm16 over the given range; anything else as CSV.
inline bool is_pgm_path(const fs::path& p) {
    auto ext = p.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext == ".pgm";
}

inline ThermalImage read_image_arg(const fs::path& path, const std::optional<TempRange>& range) {
    if (!is_pgm_path(path)) return read_csv_image(path);
    if (!range) throw Error(Errc::ValidationError, path.string() + ": pgm16 input needs --t-min and --t-max");
    return read_pgm16(path, *range);
}

inline void cmd_fuse(const fs::path& manifest_path, const FusionFlags& flags, bool no_preselect,
                     std::optional<fs::path> out_path, std::ostream& out) {
    const auto manifest = read_manifest(manifest_path);
    const auto stack = load_stack(manifest_path);
    const auto result = fuse_pipeline(stack, flags.cfg, !no_preselect, flags.jobs);
    const fs::path target = out_path ? *out_path
                                     : manifest_path.parent_path() /
                                           (manifest.format == FrameFormat::Csv ? "fused.csv" : "fused.pgm");
    write_frame(target, result.fused, manifest.format, manifest.range);
    const fs::path selection = target.parent_path() / "selection.json";
    write_file(selection, dump_json(to_json(result.selection)));
    out << "wrote " << target.string() << " and " << selection.string() << "\n";
}

inline void cmd_metrics(const fs::path& ref_path, const fs::path& fused_path, const std::optional<fs::path>& probes_path,
                        const std::optional<fs::path>& stack_path, std::size_t probe_radius,
                        const std::optional<TempRange>& range, std::ostream& out) {
    const auto ref = read_image_arg(ref_path, range);
    const auto fused = read_image_arg(fused_path, range);
    std::vector<ProbePoint> probes;
    if (probes_path) probes = probes_from_json(parse_json(read_file(*probes_path), probes_path->string()),
                                               probes_path->string());
    auto report = evaluate(ref, fused, probes, probe_radius);
    if (stack_path) report.per_frame = compare_against_stack(load_stack(*stack_path), ref);
    out << dump_json(to_json(report));
}

inline void cmd_curve(const fs::path& manifest_path, const FusionFlags& flags, std::ostream& out) {
    const auto stack = load_stack(manifest_path);
    validate_config(flags.cfg);
    const auto maps = compute_stack_activity(stack, flags.cfg, flags.jobs);
    const auto curve = max_activity_curve(maps);
    const auto sel = select_frames(curve, flags.cfg);
    auto contains = [](const std::vector<std::size_t>& v, std::size_t i) {
        return std::find(v.begin(), v.end(), i) != v.end();
    };
    out << "frame_index,max_activity,is_peak,is_selected\n";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out << i << ',' << format_double(curve.values[i]) << ',' << (contains(sel.peak_indices, i) ? 1 : 0) << ','
            << (contains(sel.selected_indices, i) ? 1 : 0) << '\n';
    }
}

// pgm16 range for simulated frames: whole degrees with a 5 degree margin.
inline TempRange simulation_range(const SimulatedStack& sim) {
    double lo = sim.ground_truth.values().front();
    double hi = lo;
    for (const auto& f : sim.stack.frames) {
        for (double v : f.values()) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    return {std::floor(lo) - 5.0, std::ceil(hi) + 5.0};
}

inline void cmd_simulate(const fs::path& scene_path, std::uint64_t seed, const fs::path& dir, FrameFormat format,
                         unsigned jobs, std::ostream& out) {
    const auto scene = scene_from_json(parse_json(read_file(scene_path), scene_path.string()), scene_path.string());
    const auto sim = simulate_stack(scene, seed, jobs);
    fs::create_directories(dir);

    StackManifest manifest;
    manifest.format = format;
    manifest.lens_positions = sim.stack.lens_positions;
    if (format == FrameFormat::Pgm16) manifest.range = simulation_range(sim);
    const std::size_t digits = std::max<std::size_t>(3, std::to_string(sim.stack.size() - 1).size());
    for (std::size_t i = 0; i < sim.stack.size(); ++i) {
        auto index = std::to_string(i);
        index.insert(0, digits - index.size(), '0');
        const std::string name = "frame_" + index + (format == FrameFormat::Csv ? ".csv" : ".pgm");
        write_frame(dir / name, sim.stack.frames[i], format, manifest.range);
        manifest.frames.push_back(name);
    }
    write_manifest(dir / "manifest.json", manifest);
    write_csv_image(dir / "ground_truth.csv", sim.ground_truth);
    write_file(dir / "probes.json", dump_json(probes_to_json(sim.probes)));
    json doc{{"scene", to_json(scene)},
             {"seed", seed},
             {"probes", probes_to_json(sim.probes)},
             {"ground_truth", "ground_truth.csv"},
             {"manifest", "manifest.json"}};
    write_file(dir / "scene.json", dump_json(doc));
    out << "wrote " << sim.stack.size() << " frames to " << dir.string() << "\n";
}

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-focus thermal image fusion", "thermofuse"};
    app.require_subcommand(1);

    auto* fuse = app.add_subcommand("fuse", "Fuse a focal stack into one all-in-focus image");
    std::string fuse_manifest;
    std::optional<std::string> fuse_out;
    bool no_preselect = false;
    FusionFlags fuse_flags;
    fuse->add_option("manifest", fuse_manifest, "Stack manifest (JSON)")->required();
    fuse->add_flag("--no-preselect", no_preselect, "Fuse every frame instead of the frames around peaks");
    fuse->add_option("--out", fuse_out, "Output image path (default: fused.<ext> next to the manifest)");
    fuse_flags.attach(*fuse);

    auto* metrics = app.add_subcommand("metrics", "Compare a fused image against a reference");
    std::string ref_path, fused_path;
    std::optional<std::string> probes_path, stack_path;
    std::size_t probe_radius = kDefaultProbeRadius;
    std::optional<double> t_min, t_max;
    metrics->add_option("reference", ref_path, "Reference image (.csv or .pgm)")->required();
    metrics->add_option("fused", fused_path, "Fused image (.csv or .pgm)")->required();
    metrics->add_option("--probes", probes_path, "Probe points (JSON)");
    metrics->add_option("--stack", stack_path, "Manifest of frames to score individually");
    metrics->add_option("--probe-radius", probe_radius, "Probe window half-width in pixels")->capture_default_str();
    metrics->add_option("--t-min", t_min, "Lower end of the pgm16 temperature range");
    metrics->add_option("--t-max", t_max, "Upper end of the pgm16 temperature range");

    auto* curve = app.add_subcommand("curve", "Print the max-activity curve as CSV");
    std::string curve_manifest;
    FusionFlags curve_flags;
    curve->add_option("manifest", curve_manifest, "Stack manifest (JSON)")->required();
    curve_flags.attach(*curve);

    auto* simulate = app.add_subcommand("simulate", "Render a synthetic focal stack");
    std::string scene_path, sim_out, sim_format = "csv";
    std::uint64_t seed = 0;
    unsigned sim_jobs = 0;
    simulate->add_option("scene", scene_path, "Scene description (JSON)")->required();
    simulate->add_option("--seed", seed, "Noise seed")->required();
    simulate->add_option("--out", sim_out, "Output directory")->required();
    simulate->add_option("--format", sim_format, "Frame format")
        ->check(CLI::IsMember({"csv", "pgm16"}))
        ->capture_default_str();
    simulate->add_option("--jobs", sim_jobs, "Worker threads (0 = all cores)")->capture_default_str();

    auto* optics = app.add_subcommand("optics", "Evaluate diffraction formulas");
    optics->require_subcommand(1);
    auto* airy = optics->add_subcommand("airy", "Airy disc diameter");
    double lambda = 0.0;
    std::optional<double> v, aperture, f_number;
    airy->add_option("--lambda", lambda, "Wavelength")->required();
    auto* v_opt = airy->add_option("--v", v, "Image distance");
    auto* d_opt = airy->add_option("--D", aperture, "Aperture diameter");
    auto* n_opt = airy->add_option("--N", f_number, "f-number");
    v_opt->needs(d_opt);
    d_opt->needs(v_opt);
    n_opt->excludes(v_opt)->excludes(d_opt);
    auto* dof = optics->add_subcommand("dof", "Depth of field");
    double dof_lambda = 0.0, dof_aperture = 0.0;
    dof->add_option("--lambda", dof_lambda, "Wavelength")->required();
    dof->add_option("--D", dof_aperture, "Aperture diameter")->required();

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (fuse->parsed()) {
            std::optional<fs::path> target;
            if (fuse_out) target = fs::path(*fuse_out);
            cmd_fuse(fuse_manifest, fuse_flags, no_preselect, target, out);
        } else if (metrics->parsed()) {
            std::optional<TempRange> range;
            if (t_min || t_max) {
                if (!t_min || !t_max) throw Error(Errc::ValidationError, "--t-min and --t-max go together");
                range = TempRange{*t_min, *t_max};
                validate_range(*range);
            }
            std::optional<fs::path> probes, stack;
            if (probes_path) probes = fs::path(*probes_path);
            if (stack_path) stack = fs::path(*stack_path);
            cmd_metrics(ref_path, fused_path, probes, stack, probe_radius, range, out);
        } else if (curve->parsed()) {
            cmd_curve(curve_manifest, curve_flags, out);
        } else if (simulate->parsed()) {
            cmd_simulate(scene_path, seed, sim_out, parse_frame_format(sim_format), sim_jobs, out);
        } else if (airy->parsed()) {
            if (f_number) {
                out << format_scalar(airy_disc_diameter_f_number(lambda, *f_number)) << "\n";
            } else if (v && aperture) {
                out << format_scalar(airy_disc_diameter(lambda, *v, *aperture)) << "\n";
            } else {
                err << "thermofuse: error: optics airy needs --N or both --v and --D\n" << airy->help();
                return kExitUsage;
            }
        } else if (dof->parsed()) {
            out << format_scalar(depth_of_field(dof_aperture, dof_lambda)) << "\n";
        }
    } catch (const std::exception& e) {
        err << "thermofuse: error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args), out, err);
}

} // namespace thermofuse::cli
