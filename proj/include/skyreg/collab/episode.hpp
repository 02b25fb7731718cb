#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "skyreg/collab/agents.hpp"
#include "skyreg/pgm.hpp"

namespace skyreg {

/// Plain-text key=value scenario description. '#' starts a comment. When
/// `episodes` > 1 the hidden true pose is drawn per episode from the
/// pose_* ranges; otherwise the fixed pose_theta_deg/pose_scale/pose_tx/ty
/// is used. robot_x/robot_y default to the map centre.
struct Scenario {
    std::uint64_t seed = 1;
    int episodes = 1;

    int tile_size = 256;
    int tile_rows = 1;
    int tile_cols = 1;
    double meters_per_pixel = 0.5;
    double origin_x = 0.0;
    double origin_y = 0.0;
    std::string map_image;   // optional PGM; procedural road scenes when empty
    std::string map_mask;    // optional PGM road mask matching map_image
    double segment_threshold = 0.5;

    double robot_x = std::numeric_limits<double>::quiet_NaN();
    double robot_y = std::numeric_limits<double>::quiet_NaN();

    double pose_theta_deg = 20.0;
    double pose_scale = 1.0;
    double pose_tx = 4.0;
    double pose_ty = -6.0;
    double pose_theta_range_deg = 45.0;
    double pose_scale_min = 0.9;
    double pose_scale_max = 1.15;
    double pose_trans_range = 15.0;

    double sensor_noise_sigma = 0.05;
    double gps_position_sigma_m = 3.0;
    double gps_heading_range_deg = 90.0;
    double gps_scale_sigma = 0.05;
};

inline Scenario parse_scenario(std::istream& in) {
    Scenario sc;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto trim = [](std::string s) {
            const std::size_t b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const std::size_t e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        if (trim(line).empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("scenario: line " + std::to_string(line_no) + " is not key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto num = [&](auto& field) {
            try {
                field = static_cast<std::remove_reference_t<decltype(field)>>(std::stod(value));
            } catch (const std::exception&) {
                throw std::runtime_error("scenario: bad numeric value for '" + key + "'");
            }
        };
        if (key == "seed") {
            try {
                sc.seed = static_cast<std::uint64_t>(std::stoull(value));
            } catch (const std::exception&) {
                throw std::runtime_error("scenario: bad numeric value for 'seed'");
            }
        }
        else if (key == "episodes") num(sc.episodes);
        else if (key == "tile_size") num(sc.tile_size);
        else if (key == "tile_rows") num(sc.tile_rows);
        else if (key == "tile_cols") num(sc.tile_cols);
        else if (key == "meters_per_pixel") num(sc.meters_per_pixel);
        else if (key == "origin_x") num(sc.origin_x);
        else if (key == "origin_y") num(sc.origin_y);
        else if (key == "map_image") sc.map_image = value;
        else if (key == "map_mask") sc.map_mask = value;
        else if (key == "segment_threshold") num(sc.segment_threshold);
        else if (key == "robot_x") num(sc.robot_x);
        else if (key == "robot_y") num(sc.robot_y);
        else if (key == "pose_theta_deg") num(sc.pose_theta_deg);
        else if (key == "pose_scale") num(sc.pose_scale);
        else if (key == "pose_tx") num(sc.pose_tx);
        else if (key == "pose_ty") num(sc.pose_ty);
        else if (key == "pose_theta_range_deg") num(sc.pose_theta_range_deg);
        else if (key == "pose_scale_min") num(sc.pose_scale_min);
        else if (key == "pose_scale_max") num(sc.pose_scale_max);
        else if (key == "pose_trans_range") num(sc.pose_trans_range);
        else if (key == "sensor_noise_sigma") num(sc.sensor_noise_sigma);
        else if (key == "gps_position_sigma_m") num(sc.gps_position_sigma_m);
        else if (key == "gps_heading_range_deg") num(sc.gps_heading_range_deg);
        else if (key == "gps_scale_sigma") num(sc.gps_scale_sigma);
        else throw std::runtime_error("scenario: unknown key '" + key + "'");
    }
    if (sc.episodes < 1 || sc.tile_rows < 1 || sc.tile_cols < 1 || sc.tile_size < 32)
        throw std::runtime_error("scenario: invalid grid or episode count");
    if (!(sc.meters_per_pixel > 0.0)) throw std::runtime_error("scenario: meters_per_pixel must be positive");
    return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("scenario: cannot open " + path.string());
    return parse_scenario(in);
}

/// Synthetic overhead tile: bright textured ground with dark road bands and
/// dark plaza blobs, soft-edged so subpixel registration stays meaningful.
inline Raster make_road_scene(int size, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    struct Band {
        double nx, ny, offset, half_width;
    };
    std::vector<Band> bands;
    const int n_bands = 2 + static_cast<int>(gen() % 2);
    for (int i = 0; i < n_bands; ++i) {
        const double psi = uniform_range(gen, 0.0, std::numbers::pi);
        const double px = uniform_range(gen, 0.2, 0.8) * size;
        const double py = uniform_range(gen, 0.2, 0.8) * size;
        Band b{std::cos(psi), std::sin(psi), 0.0, uniform_range(gen, 6.0, 13.0)};
        b.offset = b.nx * px + b.ny * py;
        bands.push_back(b);
    }
    struct Blob {
        double cx, cy, radius;
    };
    std::vector<Blob> blobs;
    const int n_blobs = 3 + static_cast<int>(gen() % 3);
    for (int i = 0; i < n_blobs; ++i)
        blobs.push_back({uniform_range(gen, 0.15, 0.85) * size, uniform_range(gen, 0.15, 0.85) * size,
                         uniform_range(gen, 8.0, 22.0)});
    const double fx = uniform_range(gen, 1.5, 3.5);
    const double fy = uniform_range(gen, 1.5, 3.5);
    const double phase_x = uniform_range(gen, 0.0, 2.0 * std::numbers::pi);
    const double phase_y = uniform_range(gen, 0.0, 2.0 * std::numbers::pi);

    Raster img(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double v = 0.82 + 0.05 * std::sin(2.0 * std::numbers::pi * fx * x / size + phase_x) +
                       0.05 * std::sin(2.0 * std::numbers::pi * fy * y / size + phase_y);
            double road = 0.0;
            for (const Band& b : bands) {
                const double d = std::abs(b.nx * x + b.ny * y - b.offset);
                road = std::max(road, std::clamp((b.half_width + 1.5 - d) / 3.0, 0.0, 1.0));
            }
            for (const Blob& b : blobs) {
                const double d = std::hypot(x - b.cx, y - b.cy);
                road = std::max(road, std::clamp((b.radius + 1.5 - d) / 3.0, 0.0, 1.0));
            }
            img.at(x, y) = std::clamp(v * (1.0 - road) + 0.15 * road, 0.0, 1.0);
        }
    }
    return img;
}

inline GlobalMap make_scenario_map(const Scenario& sc) {
    GlobalMap map;
    map.tile_size = sc.tile_size;
    map.rows = sc.tile_rows;
    map.cols = sc.tile_cols;
    map.origin_x = sc.origin_x;
    map.origin_y = sc.origin_y;
    map.meters_per_pixel = sc.meters_per_pixel;
    const double extent = map.tile_extent_m();
    if (!sc.map_image.empty()) {
        const Raster full = read_pgm(sc.map_image);
        if (full.width < sc.tile_cols * sc.tile_size || full.height < sc.tile_rows * sc.tile_size)
            throw std::runtime_error("scenario: map image smaller than the tile grid");
        Raster mask;
        if (!sc.map_mask.empty()) mask = binarize(read_pgm(sc.map_mask));
        for (int r = 0; r < sc.tile_rows; ++r) {
            for (int c = 0; c < sc.tile_cols; ++c) {
                MapTile tile;
                tile.image = Raster(sc.tile_size, sc.tile_size);
                if (!mask.empty()) tile.segmentation = Raster(sc.tile_size, sc.tile_size);
                for (int y = 0; y < sc.tile_size; ++y) {
                    for (int x = 0; x < sc.tile_size; ++x) {
                        tile.image.at(x, y) = full.at(c * sc.tile_size + x, r * sc.tile_size + y);
                        if (!mask.empty())
                            tile.segmentation.at(x, y) = mask.at(c * sc.tile_size + x, r * sc.tile_size + y);
                    }
                }
                tile.world_x = sc.origin_x + c * extent;
                tile.world_y = sc.origin_y + r * extent;
                map.tiles.push_back(std::move(tile));
            }
        }
    } else {
        for (int r = 0; r < sc.tile_rows; ++r) {
            for (int c = 0; c < sc.tile_cols; ++c) {
                MapTile tile;
                tile.image = make_road_scene(sc.tile_size,
                                             mix_seed(sc.seed, 0x1000u + static_cast<std::uint64_t>(r) * sc.tile_cols + c));
                tile.world_x = sc.origin_x + c * extent;
                tile.world_y = sc.origin_y + r * extent;
                map.tiles.push_back(std::move(tile));
            }
        }
    }
    return map;
}

/// One collaboration round, summarized. Errors compare the GPS prior and the
/// refined transform against the hidden true pose.
struct EpisodeReport {
    int episode = 0;
    Sim2 true_pose;
    Sim2 initial_pose;
    Sim2 refined_pose;
    double initial_rot_error_deg = 0.0;
    double refined_rot_error_deg = 0.0;
    double initial_scale_error = 0.0;
    double refined_scale_error = 0.0;
    double improvement = 0.0;  // 1 - refined/initial rotation error
    bool used_fallback = false;
    bool protocol_error = false;
    std::string diagnostic;
    Raster feasible_region_mask;
    double register_ms = 0.0;
    double episode_ms = 0.0;
};

/// 1 - refined/initial, reported as 0 when the initial rotation error is
/// already below half a degree (the ratio blows up near zero).
inline double improvement_fraction(double initial_rot_error_deg, double refined_rot_error_deg) {
    if (initial_rot_error_deg < 0.5) return 0.0;
    return 1.0 - refined_rot_error_deg / initial_rot_error_deg;
}

/// Run both agents to completion over an in-memory ordered transport.
/// Deterministic for a fixed scenario, episode index and config.
inline EpisodeReport run_episode(const Scenario& sc, int episode_index, const PipelineConfig& cfg = {},
                                 const GlobalMap* prebuilt_map = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    GlobalMap local_map;
    const GlobalMap* map = prebuilt_map;
    if (map == nullptr) {
        local_map = make_scenario_map(sc);
        map = &local_map;
    }
    const std::uint64_t episode_seed = mix_seed(sc.seed, static_cast<std::uint64_t>(episode_index));
    std::mt19937_64 gen(episode_seed);

    double theta = deg2rad(sc.pose_theta_deg);
    double scale = sc.pose_scale;
    double tx = sc.pose_tx;
    double ty = sc.pose_ty;
    if (sc.episodes > 1) {
        theta = uniform_range(gen, -deg2rad(sc.pose_theta_range_deg), deg2rad(sc.pose_theta_range_deg));
        scale = uniform_range(gen, sc.pose_scale_min, sc.pose_scale_max);
        tx = uniform_range(gen, -sc.pose_trans_range, sc.pose_trans_range);
        ty = uniform_range(gen, -sc.pose_trans_range, sc.pose_trans_range);
    }
    const Sim2 true_pose(scale, theta, tx, ty);

    const double robot_x =
        std::isnan(sc.robot_x) ? sc.origin_x + sc.tile_cols * map->tile_extent_m() / 2.0 : sc.robot_x;
    const double robot_y =
        std::isnan(sc.robot_y) ? sc.origin_y + sc.tile_rows * map->tile_extent_m() / 2.0 : sc.robot_y;

    const MapTile& tile = tile_lookup(*map, robot_x, robot_y);
    const Raster seg =
        tile.segmentation.empty() ? segment_toy(tile.image, sc.segment_threshold) : tile.segmentation;
    Raster sensor = warp(seg, true_pose, map->tile_size, map->tile_size);
    if (sc.sensor_noise_sigma > 0.0) {
        add_gaussian_noise(sensor, sc.sensor_noise_sigma, gen);
        clamp01(sensor);
    }

    const GpsNoiseModel noise{sc.gps_position_sigma_m, deg2rad(sc.gps_heading_range_deg),
                              sc.gps_scale_sigma, mix_seed(episode_seed, 0x67)};
    const Sim2 initial = gps_initial_transform(true_pose, noise, map->meters_per_pixel);

    EpisodeReport report;
    report.episode = episode_index;
    report.true_pose = true_pose;
    report.initial_pose = initial;

    DroneAgent drone(*map, initial, cfg, sc.segment_threshold);
    GroundAgent ground(robot_x, robot_y, std::move(sensor));
    try {
        for (const Frame& frame : ground.start())
            for (const Frame& reply : drone.handle_frame(frame))
                ground.handle_frame(reply);
        report.feasible_region_mask = ground.feasible();
    } catch (const ProtocolError& e) {
        report.protocol_error = true;
        report.diagnostic = e.what();
    } catch (const WireError& e) {
        report.protocol_error = true;
        report.diagnostic = e.what();
    }

    if (drone.refinement()) {
        report.refined_pose = drone.refinement()->transform;
        report.used_fallback = drone.refinement()->used_fallback;
        report.register_ms = drone.refinement()->register_ms;
    } else {
        report.refined_pose = initial;
        report.used_fallback = true;
    }
    report.initial_rot_error_deg = std::abs(rad2deg(normalize_angle(initial.theta - true_pose.theta)));
    report.refined_rot_error_deg =
        std::abs(rad2deg(normalize_angle(report.refined_pose.theta - true_pose.theta)));
    report.initial_scale_error = std::abs(initial.s / true_pose.s - 1.0);
    report.refined_scale_error = std::abs(report.refined_pose.s / true_pose.s - 1.0);
    report.improvement = improvement_fraction(report.initial_rot_error_deg, report.refined_rot_error_deg);
    report.episode_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

inline std::vector<EpisodeReport> run_all_episodes(const Scenario& sc, const PipelineConfig& cfg = {}) {
    const GlobalMap map = make_scenario_map(sc);
    std::vector<EpisodeReport> reports;
    reports.reserve(static_cast<std::size_t>(sc.episodes));
    for (int i = 0; i < sc.episodes; ++i) reports.push_back(run_episode(sc, i, cfg, &map));
    return reports;
}

}  // namespace skyreg
