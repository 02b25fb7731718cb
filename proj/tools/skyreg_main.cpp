// Command-line surface for the registration engine and the drone/ground
// collaboration simulator.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skyreg/skyreg.hpp"

namespace {

using namespace skyreg;

struct CommonOptions {
    std::string config_path;
    std::uint64_t seed = 1;
    int size = 256;
    double temperature = 0.1;
    std::string out_dir;
    std::string report_path;
    bool size_set = false;
    bool temperature_set = false;
};

void add_common_options(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "key=value pipeline config file");
    cmd->add_option("--seed", opts.seed, "random seed");
    cmd->add_option("--size", opts.size, "working size in pixels (power of two)")
        ->each([&opts](const std::string&) { opts.size_set = true; });
    cmd->add_option("--temperature", opts.temperature,
                    "soft-argmax temperature (fraction of surface dynamic range)")
        ->each([&opts](const std::string&) { opts.temperature_set = true; });
    cmd->add_option("--out", opts.out_dir, "output directory for artifacts");
    cmd->add_option("--report", opts.report_path, "write a key=value report file");
}

PipelineConfig build_config(const CommonOptions& opts) {
    PipelineConfig cfg;
    if (!opts.config_path.empty()) {
        const auto fields = parse_report(opts.config_path);
        for (const auto& [key, value] : fields) {
            if (key == "working_size") cfg.working_size = std::stoi(value);
            else if (key == "temperature") cfg.temperature = std::stod(value);
            else if (key == "window_radius") cfg.window_radius = std::stoi(value);
            else if (key == "highpass") cfg.highpass_enabled = std::stoi(value) != 0;
            else if (key == "eps") cfg.eps = std::stod(value);
            else if (key == "min_confidence") cfg.min_confidence = std::stod(value);
            else if (key == "angular_bins") cfg.logpolar.angular_bins = std::stoi(value);
            else if (key == "radial_bins") cfg.logpolar.radial_bins = std::stoi(value);
            else if (key == "feature_mode") {
                if (value == "identity") cfg.feature_mode = FeatureMode::identity;
                else if (value == "gradient-magnitude") cfg.feature_mode = FeatureMode::gradient_magnitude;
                else throw std::runtime_error("config: unknown feature_mode '" + value + "'");
            } else {
                throw std::runtime_error("config: unknown key '" + key + "'");
            }
        }
    }
    if (opts.size_set) cfg.working_size = opts.size;
    if (opts.temperature_set) cfg.temperature = opts.temperature;
    return cfg;
}

double percentile(std::vector<double> sorted, double q) {
    std::sort(sorted.begin(), sorted.end());
    const std::size_t idx =
        static_cast<std::size_t>(q * (static_cast<double>(sorted.size()) - 1.0) + 0.5);
    return sorted[std::min(idx, sorted.size() - 1)];
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

int cmd_register(const CommonOptions& opts, const std::string& template_path,
                 const std::string& source_path) {
    const PipelineConfig cfg = build_config(opts);
    const Raster templ = read_pgm(template_path);
    const Raster source = read_pgm(source_path);
    const RegistrationEstimate est = register_images(templ, source, cfg);
    std::printf("s=%.6f theta_deg=%.4f tx=%.3f ty=%.3f rot_confidence=%.3f trans_confidence=%.3f "
                "flip=%d elapsed_ms=%.2f\n",
                est.transform.s, rad2deg(est.transform.theta), est.transform.tx, est.transform.ty,
                est.rot_confidence, est.trans_confidence, est.ambiguity_resolved_by_flip ? 1 : 0,
                est.elapsed_ms);
    if (std::min(est.rot_confidence, est.trans_confidence) < cfg.min_confidence)
        std::printf("warning: low confidence, estimate may be unreliable\n");
    if (!opts.out_dir.empty()) {
        std::filesystem::create_directories(opts.out_dir);
        const Raster aligned = warp(source, est.transform, templ.width, templ.height);
        Raster overlay(templ.width, templ.height);
        for (std::size_t i = 0; i < overlay.data.size(); ++i)
            overlay.data[i] = 0.5 * templ.data[i] + 0.5 * aligned.data[i];
        write_pgm(std::filesystem::path(opts.out_dir) / "overlay.pgm", overlay);
        write_pgm(std::filesystem::path(opts.out_dir) / "aligned.pgm", aligned);
    }
    if (!opts.report_path.empty()) {
        write_report(opts.report_path,
                     {{"s", format_double(est.transform.s)},
                      {"theta_deg", format_double(rad2deg(est.transform.theta))},
                      {"tx", format_double(est.transform.tx)},
                      {"ty", format_double(est.transform.ty)},
                      {"rot_confidence", format_double(est.rot_confidence)},
                      {"trans_confidence", format_double(est.trans_confidence)},
                      {"flip", est.ambiguity_resolved_by_flip ? "1" : "0"},
                      {"elapsed_ms", format_double(est.elapsed_ms)}});
    }
    return 0;
}

int cmd_synth(const CommonOptions& opts, const std::string& image_path, const SynthOptions& synth) {
    if (opts.out_dir.empty()) throw std::runtime_error("synth: --out directory is required");
    Raster image = image_path.empty() ? make_synthetic_scene(opts.size, opts.seed)
                                      : read_pgm(image_path);
    SynthOptions s = synth;
    s.seed = opts.seed;
    const PairManifest manifest = generate_synthetic(image, s, opts.out_dir);
    std::printf("wrote %zu pairs under %s\n", manifest.entries.size(), opts.out_dir.c_str());
    return 0;
}

int cmd_eval(const CommonOptions& opts, const std::string& manifest_path, int threads) {
    const PipelineConfig cfg = build_config(opts);
    const PairManifest manifest = load_manifest(manifest_path);
    const EvalSummary summary = evaluate(manifest, cfg, threads);
    std::printf("acc_scale=%.5f acc_rot=%.5f acc_xy=%.5f mean_latency_ms=%.2f n=%d excluded=%d\n",
                summary.acc_scale, summary.acc_rot, summary.acc_xy, summary.mean_latency_ms,
                summary.n, summary.excluded);
    if (!opts.report_path.empty()) write_eval_report(opts.report_path, summary);
    return 0;
}

int cmd_simulate(const CommonOptions& opts, const std::string& scenario_path) {
    const PipelineConfig cfg = build_config(opts);
    Scenario scenario = load_scenario(scenario_path);
    const std::vector<EpisodeReport> reports = run_all_episodes(scenario, cfg);
    std::vector<double> initial_rot, refined_rot, improvements;
    int improved = 0, fallbacks = 0, protocol_errors = 0;
    for (const EpisodeReport& r : reports) {
        std::printf("episode=%d initial_rot_deg=%.3f refined_rot_deg=%.3f initial_scale_err=%.4f "
                    "refined_scale_err=%.4f improvement=%.4f fallback=%d%s\n",
                    r.episode, r.initial_rot_error_deg, r.refined_rot_error_deg,
                    r.initial_scale_error, r.refined_scale_error, r.improvement,
                    r.used_fallback ? 1 : 0, r.protocol_error ? " protocol_error" : "");
        if (r.protocol_error) {
            ++protocol_errors;
            continue;
        }
        initial_rot.push_back(r.initial_rot_error_deg);
        refined_rot.push_back(r.refined_rot_error_deg);
        improvements.push_back(r.improvement);
        if (r.refined_rot_error_deg < r.initial_rot_error_deg) ++improved;
        if (r.used_fallback) ++fallbacks;
    }
    const int completed = static_cast<int>(refined_rot.size());
    const double improved_fraction = completed > 0 ? static_cast<double>(improved) / completed : 0.0;
    std::printf("episodes=%d median_initial_rot_deg=%.3f median_refined_rot_deg=%.3f "
                "median_improvement=%.4f improved_fraction=%.3f fallbacks=%d protocol_errors=%d\n",
                completed, median(initial_rot), median(refined_rot), median(improvements),
                improved_fraction, fallbacks, protocol_errors);
    if (!opts.report_path.empty()) {
        write_report(opts.report_path,
                     {{"episodes", std::to_string(completed)},
                      {"median_initial_rot_error_deg", format_double(median(initial_rot))},
                      {"median_refined_rot_error_deg", format_double(median(refined_rot))},
                      {"median_improvement", format_double(median(improvements))},
                      {"improved_fraction", format_double(improved_fraction)},
                      {"fallbacks", std::to_string(fallbacks)},
                      {"protocol_errors", std::to_string(protocol_errors)}});
    }
    if (!opts.out_dir.empty() && !reports.empty() && !reports.front().feasible_region_mask.empty()) {
        std::filesystem::create_directories(opts.out_dir);
        write_pgm(std::filesystem::path(opts.out_dir) / "feasible_region.pgm",
                  reports.front().feasible_region_mask);
    }
    return 0;
}

int cmd_bench(const CommonOptions& opts, int iterations, double budget_ms) {
    const PipelineConfig cfg = build_config(opts);
    const Raster templ = make_synthetic_scene(cfg.working_size, opts.seed);
    Raster source = warp(templ, Sim2(1.12, deg2rad(24.0), 6.0, -4.0));
    std::mt19937_64 gen(mix_seed(opts.seed, 0xbe));
    add_gaussian_noise(source, 0.02, gen);
    clamp01(source);
    for (int i = 0; i < 2; ++i) register_images(templ, source, cfg);  // warm-up
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(iterations));
    for (int i = 0; i < iterations; ++i)
        times.push_back(register_images(templ, source, cfg).elapsed_ms);
    double mean = 0.0;
    for (double t : times) mean += t;
    mean /= static_cast<double>(times.size());
    const double p50 = percentile(times, 0.50);
    const double p90 = percentile(times, 0.90);
    const double worst = *std::max_element(times.begin(), times.end());
    std::printf("iterations=%d size=%d mean_ms=%.2f p50_ms=%.2f p90_ms=%.2f max_ms=%.2f budget_ms=%.1f\n",
                iterations, cfg.working_size, mean, p50, p90, worst, budget_ms);
    if (!opts.report_path.empty()) {
        write_report(opts.report_path, {{"iterations", std::to_string(iterations)},
                                        {"size", std::to_string(cfg.working_size)},
                                        {"mean_ms", format_double(mean)},
                                        {"p50_ms", format_double(p50)},
                                        {"p90_ms", format_double(p90)},
                                        {"max_ms", format_double(worst)},
                                        {"budget_ms", format_double(budget_ms)},
                                        {"within_budget", p50 <= budget_ms ? "1" : "0"}});
    }
    if (p50 > budget_ms) {
        std::fprintf(stderr, "bench: p50 %.2f ms exceeds the %.1f ms budget\n", p50, budget_ms);
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SIM(2) image registration via differentiable phase correlation, "
                 "plus a drone/ground collaboration simulator"};
    app.require_subcommand(1);

    CommonOptions reg_opts, synth_opts_c, eval_opts, sim_opts, bench_opts;

    CLI::App* reg = app.add_subcommand("register", "estimate the transform aligning SOURCE to TEMPLATE");
    std::string reg_template, reg_source;
    reg->add_option("template", reg_template, "template image (PGM)")->required();
    reg->add_option("source", reg_source, "source image (PGM)")->required();
    add_common_options(reg, reg_opts);

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic registration dataset");
    std::string synth_image;
    SynthOptions synth_params;
    synth->add_option("--image", synth_image, "template image (procedural scene when omitted)");
    synth->add_option("--n", synth_params.count, "number of pairs");
    synth->add_option("--theta-min", synth_params.theta_min_deg, "min rotation, degrees");
    synth->add_option("--theta-max", synth_params.theta_max_deg, "max rotation, degrees");
    synth->add_option("--scale-min", synth_params.scale_min, "min scale");
    synth->add_option("--scale-max", synth_params.scale_max, "max scale");
    synth->add_option("--trans", synth_params.trans_range_px, "translation half-range, pixels");
    synth->add_option("--noise", synth_params.noise_sigma, "additive Gaussian noise sigma");
    add_common_options(synth, synth_opts_c);

    CLI::App* eval_cmd = app.add_subcommand("eval", "register every manifest pair and summarize accuracy");
    std::string eval_manifest;
    int eval_threads = 0;
    eval_cmd->add_option("manifest", eval_manifest, "manifest.csv path")->required();
    eval_cmd->add_option("--threads", eval_threads, "worker threads (0 = hardware)");
    add_common_options(eval_cmd, eval_opts);

    CLI::App* sim = app.add_subcommand("simulate", "run collaboration episodes from a scenario file");
    std::string scenario_path;
    sim->add_option("scenario", scenario_path, "scenario key=value file")->required();
    add_common_options(sim, sim_opts);

    CLI::App* bench = app.add_subcommand("bench", "time single registrations and report percentiles");
    int bench_iters = 20;
    double bench_budget = 200.0;
    bench->add_option("--iters", bench_iters, "measured iterations");
    bench->add_option("--budget-ms", bench_budget, "p50 latency budget in milliseconds");
    add_common_options(bench, bench_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (reg->parsed()) return cmd_register(reg_opts, reg_template, reg_source);
        if (synth->parsed()) return cmd_synth(synth_opts_c, synth_image, synth_params);
        if (eval_cmd->parsed()) return cmd_eval(eval_opts, eval_manifest, eval_threads);
        if (sim->parsed()) return cmd_simulate(sim_opts, scenario_path);
        if (bench->parsed()) return cmd_bench(bench_opts, bench_iters, bench_budget);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
