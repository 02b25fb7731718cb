#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "skyreg/pgm.hpp"
#include "skyreg/registration.hpp"
#include "skyreg/rng.hpp"
#include "skyreg/warp.hpp"

namespace skyreg {

struct PairEntry {
    std::string template_path;
    std::string source_path;
    double theta_deg = 0.0;  // ground-truth template-to-source rotation
    double scale = 1.0;
    double tx = 0.0;
    double ty = 0.0;
};

struct PairManifest {
    std::vector<PairEntry> entries;
};

inline constexpr const char* kManifestHeader = "template,source,theta_deg,scale,tx,ty";

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void save_manifest(const std::filesystem::path& path, const PairManifest& manifest) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_manifest: cannot open " + path.string());
    out << kManifestHeader << "\n";
    for (const PairEntry& e : manifest.entries)
        out << e.template_path << "," << e.source_path << "," << format_double(e.theta_deg) << ","
            << format_double(e.scale) << "," << format_double(e.tx) << "," << format_double(e.ty)
            << "\n";
    if (!out) throw std::runtime_error("save_manifest: short write to " + path.string());
}

/// Comma-separated manifest with the fixed header line. Relative image paths
/// resolve against the manifest's own directory.
inline PairManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_manifest: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kManifestHeader)
        throw std::runtime_error("load_manifest: missing header line in " + path.string());
    const std::filesystem::path base = path.parent_path();
    const auto resolve = [&base](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };
    PairManifest manifest;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 6)
            throw std::runtime_error("load_manifest: malformed row in " + path.string());
        PairEntry e;
        e.template_path = resolve(fields[0]);
        e.source_path = resolve(fields[1]);
        try {
            e.theta_deg = std::stod(fields[2]);
            e.scale = std::stod(fields[3]);
            e.tx = std::stod(fields[4]);
            e.ty = std::stod(fields[5]);
        } catch (const std::exception&) {
            throw std::runtime_error("load_manifest: bad numeric field in " + path.string());
        }
        if (!(e.scale > 0.0)) throw std::runtime_error("load_manifest: scale_gt must be positive");
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

/// Mean of 1 - |s - s*| / |s*|. Entries with |s*| < 1e-6 are excluded and
/// counted; an empty post-exclusion set is rejected.
inline double acc_scale(std::span<const double> estimates, std::span<const double> truths,
                        int* excluded_out = nullptr) {
    if (estimates.size() != truths.size()) throw std::invalid_argument("acc_scale: length mismatch");
    double sum = 0.0;
    int n = 0, excluded = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (std::abs(truths[i]) < 1e-6) {
            ++excluded;
            continue;
        }
        sum += 1.0 - std::abs((estimates[i] - truths[i]) / truths[i]);
        ++n;
    }
    if (excluded_out) *excluded_out = excluded;
    if (n == 0) throw std::invalid_argument("acc_scale: no entries left after exclusion");
    return sum / n;
}

/// Mean of 1 - |theta - theta*| / |theta*| with angles in degrees. Entries
/// with |theta*| < 0.01 degrees are excluded and counted.
inline double acc_rot(std::span<const double> estimates, std::span<const double> truths,
                      int* excluded_out = nullptr) {
    if (estimates.size() != truths.size()) throw std::invalid_argument("acc_rot: length mismatch");
    double sum = 0.0;
    int n = 0, excluded = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (std::abs(truths[i]) < 0.01) {
            ++excluded;
            continue;
        }
        sum += 1.0 - std::abs((estimates[i] - truths[i]) / truths[i]);
        ++n;
    }
    if (excluded_out) *excluded_out = excluded;
    if (n == 0) throw std::invalid_argument("acc_rot: no entries left after exclusion");
    return sum / n;
}

struct EvalSummary {
    double acc_scale = 0.0;
    double acc_rot = 0.0;
    double acc_xy = 0.0;          // fraction with translation error <= 2 px
    double mean_latency_ms = 0.0;
    int n = 0;                    // pairs registered
    int excluded = 0;             // unreadable or near-zero ground truth
};

/// Deterministic textured test pattern: Gabor patches (localized oriented
/// waves) over elongated Gaussian blobs. Both concentrate spectral energy at
/// distinct (radius, angle) spots away from DC, which is what the
/// rotation/scale stage keys on; isotropic content or unwindowed sinusoids
/// (whose leakage tails hug the frequency axes) make poor test subjects.
/// Used by synth when no input image is given and by bench.
inline Raster make_synthetic_scene(int size, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    struct Patch {
        double cx, cy, kx, ky, phase, inv_two_sigma2, amp;
    };
    std::vector<Patch> patches;
    for (int i = 0; i < 10; ++i) {
        const double psi = uniform_range(gen, 0.0, std::numbers::pi);
        const double cycles = uniform_range(gen, 4.0, 28.0);
        const double sigma = uniform_range(gen, size / 12.0, size / 5.0);
        patches.push_back({uniform_range(gen, 0.15, 0.85) * size, uniform_range(gen, 0.15, 0.85) * size,
                           cycles * std::cos(psi) / size, cycles * std::sin(psi) / size,
                           uniform_range(gen, 0.0, 2.0 * std::numbers::pi), 1.0 / (2.0 * sigma * sigma),
                           uniform_range(gen, 0.08, 0.16)});
    }
    struct Blob {
        double cx, cy, cos_psi, sin_psi, sigma_major, sigma_minor, amp;
    };
    std::vector<Blob> blobs;
    for (int i = 0; i < 8; ++i) {
        const double psi = uniform_range(gen, 0.0, std::numbers::pi);
        const double major = uniform_range(gen, size / 24.0, size / 8.0);
        blobs.push_back({uniform_range(gen, 0.12, 0.88) * size, uniform_range(gen, 0.12, 0.88) * size,
                         std::cos(psi), std::sin(psi), major,
                         major / uniform_range(gen, 2.0, 5.0), uniform_range(gen, -0.3, 0.3)});
    }
    Raster img(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double v = 0.5;
            for (const Patch& p : patches) {
                const double dx = x - p.cx;
                const double dy = y - p.cy;
                const double envelope = std::exp(-(dx * dx + dy * dy) * p.inv_two_sigma2);
                v += p.amp * envelope *
                     std::sin(2.0 * std::numbers::pi * (p.kx * dx + p.ky * dy) + p.phase);
            }
            for (const Blob& b : blobs) {
                const double dx = x - b.cx;
                const double dy = y - b.cy;
                const double along = b.cos_psi * dx + b.sin_psi * dy;
                const double across = -b.sin_psi * dx + b.cos_psi * dy;
                v += b.amp * std::exp(-along * along / (2.0 * b.sigma_major * b.sigma_major) -
                                      across * across / (2.0 * b.sigma_minor * b.sigma_minor));
            }
            img.at(x, y) = std::clamp(v, 0.0, 1.0);
        }
    }
    return img;
}

struct SynthOptions {
    int count = 100;
    double theta_min_deg = -60.0;
    double theta_max_deg = 60.0;
    double scale_min = 0.8;
    double scale_max = 1.3;
    double trans_range_px = 20.0;
    double noise_sigma = 0.05;
    std::uint64_t seed = 1;
};

/// Write `count` warped copies of the template plus a manifest recording the
/// exact transforms. Deterministic per seed. Ranges must stay inside the
/// pipeline's validity envelope (scale within [0.5, 2], |theta| <= 85 deg).
inline PairManifest generate_synthetic(const Raster& image, const SynthOptions& opt,
                                       const std::filesystem::path& out_dir) {
    if (opt.count < 1) throw std::invalid_argument("generate_synthetic: count must be positive");
    if (!(opt.scale_min >= 0.5 && opt.scale_max <= 2.0 && opt.scale_min <= opt.scale_max))
        throw std::invalid_argument("generate_synthetic: scale range must lie within [0.5, 2]");
    if (!(opt.theta_min_deg >= -85.0 && opt.theta_max_deg <= 85.0 && opt.theta_min_deg <= opt.theta_max_deg))
        throw std::invalid_argument("generate_synthetic: rotation range must lie within [-85, 85] degrees");
    if (opt.trans_range_px < 0.0 || opt.noise_sigma < 0.0)
        throw std::invalid_argument("generate_synthetic: negative range");
    std::filesystem::create_directories(out_dir);
    write_pgm(out_dir / "template.pgm", image);
    std::mt19937_64 gen(opt.seed);
    PairManifest manifest;
    for (int i = 0; i < opt.count; ++i) {
        const double theta_deg = uniform_range(gen, opt.theta_min_deg, opt.theta_max_deg);
        const double s = uniform_range(gen, opt.scale_min, opt.scale_max);
        const double tx = uniform_range(gen, -opt.trans_range_px, opt.trans_range_px);
        const double ty = uniform_range(gen, -opt.trans_range_px, opt.trans_range_px);
        Raster source = warp(image, Sim2(s, deg2rad(theta_deg), tx, ty));
        if (opt.noise_sigma > 0.0) {
            add_gaussian_noise(source, opt.noise_sigma, gen);
            clamp01(source);
        }
        char name[32];
        std::snprintf(name, sizeof(name), "source_%04d.pgm", i);
        write_pgm(out_dir / name, source);
        manifest.entries.push_back({"template.pgm", name, theta_deg, s, tx, ty});
    }
    save_manifest(out_dir / "manifest.csv", manifest);
    return load_manifest(out_dir / "manifest.csv");
}

/// Register every manifest pair and summarize with the relative-accuracy
/// metrics. Pairs run concurrently; aggregation is in manifest order, so the
/// summary is order-deterministic. Unreadable entries are skipped and counted.
inline EvalSummary evaluate(const PairManifest& manifest, const PipelineConfig& cfg = {},
                            int threads = 0) {
    if (manifest.entries.empty()) throw std::invalid_argument("evaluate: empty manifest");
    const std::size_t n = manifest.entries.size();
    struct Row {
        bool ok = false;
        double theta_deg = 0.0, scale = 1.0, tx = 0.0, ty = 0.0, latency_ms = 0.0;
    };
    std::vector<Row> rows(n);
    int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
    n_threads = std::min<int>(n_threads, static_cast<int>(n));
    const auto worker = [&](int tid) {
        for (std::size_t i = static_cast<std::size_t>(tid); i < n; i += static_cast<std::size_t>(n_threads)) {
            const PairEntry& e = manifest.entries[i];
            try {
                const Raster templ = read_pgm(e.template_path);
                const Raster source = read_pgm(e.source_path);
                const RegistrationEstimate est = register_images(templ, source, cfg);
                const Sim2 forward = invert(est.transform);  // template-to-source, like the truth
                rows[i] = {true, rad2deg(forward.theta), forward.s, forward.tx, forward.ty,
                           est.elapsed_ms};
            } catch (const std::exception&) {
                rows[i].ok = false;
            }
        }
    };
    if (n_threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
        for (std::thread& t : pool) t.join();
    }
    std::vector<double> est_scale, gt_scale, est_rot, gt_rot;
    int registered = 0, excluded = 0, within_2px = 0;
    double latency_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const PairEntry& e = manifest.entries[i];
        if (!rows[i].ok) {
            ++excluded;
            continue;
        }
        ++registered;
        latency_sum += rows[i].latency_ms;
        if (std::hypot(rows[i].tx - e.tx, rows[i].ty - e.ty) <= 2.0) ++within_2px;
        // zero-truth exclusion is per metric; the formulas divide by the truth
        const bool rot_excluded = std::abs(e.theta_deg) < 0.01;
        const bool scale_excluded = std::abs(e.scale) < 1e-6;
        if (rot_excluded || scale_excluded) ++excluded;
        if (!rot_excluded) {
            est_rot.push_back(rows[i].theta_deg);
            gt_rot.push_back(e.theta_deg);
        }
        if (!scale_excluded) {
            est_scale.push_back(rows[i].scale);
            gt_scale.push_back(e.scale);
        }
    }
    if (registered == 0) throw std::runtime_error("evaluate: no readable pairs");
    EvalSummary summary;
    summary.acc_scale = est_scale.empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : acc_scale(est_scale, gt_scale);
    summary.acc_rot =
        est_rot.empty() ? std::numeric_limits<double>::quiet_NaN() : acc_rot(est_rot, gt_rot);
    summary.acc_xy = static_cast<double>(within_2px) / registered;
    summary.mean_latency_ms = latency_sum / registered;
    summary.n = registered;
    summary.excluded = excluded;
    return summary;
}

/// Plain-text report: one key=value line per field, in the given order.
inline void write_report(const std::filesystem::path& path,
                         const std::vector<std::pair<std::string, std::string>>& fields) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_report: cannot open " + path.string());
    for (const auto& [key, value] : fields) out << key << "=" << value << "\n";
    if (!out) throw std::runtime_error("write_report: short write to " + path.string());
}

inline std::map<std::string, std::string> parse_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_report: cannot open " + path.string());
    std::map<std::string, std::string> fields;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("parse_report: malformed line in " + path.string());
        fields[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return fields;
}

inline void write_eval_report(const std::filesystem::path& path, const EvalSummary& summary) {
    write_report(path, {{"acc_scale", format_double(summary.acc_scale)},
                        {"acc_rot", format_double(summary.acc_rot)},
                        {"acc_xy", format_double(summary.acc_xy)},
                        {"mean_latency_ms", format_double(summary.mean_latency_ms)},
                        {"n", std::to_string(summary.n)},
                        {"excluded", std::to_string(summary.excluded)}});
}

}  // namespace skyreg
