#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "skyreg/raster.hpp"
#include "skyreg/rng.hpp"
#include "skyreg/sim2.hpp"

namespace skyreg {

struct MapTile {
    Raster image;
    Raster segmentation;  // binary, 1 = road; empty when the drone segments on demand
    double world_x = 0.0;  // top-left corner, meters
    double world_y = 0.0;
    Sim2 true_pose_to_ground;  // scenario ground truth, never read by the agents
};

/// Regular grid of non-overlapping tiles, row-major.
struct GlobalMap {
    int tile_size = 256;  // pixels per tile edge
    int rows = 1;
    int cols = 1;
    double origin_x = 0.0;  // world meters of tile (0,0)'s corner
    double origin_y = 0.0;
    double meters_per_pixel = 0.5;
    std::vector<MapTile> tiles;

    double tile_extent_m() const { return tile_size * meters_per_pixel; }
};

/// Tile whose grid cell contains the localization. Points on a shared edge
/// belong to the tile with the smaller grid index.
inline const MapTile& tile_lookup(const GlobalMap& map, double world_x, double world_y) {
    if (map.tiles.size() != static_cast<std::size_t>(map.rows) * map.cols)
        throw std::invalid_argument("tile_lookup: malformed map");
    const double extent = map.tile_extent_m();
    const double u = (world_x - map.origin_x) / extent;
    const double v = (world_y - map.origin_y) / extent;
    if (!(u >= 0.0) || !(v >= 0.0) || !(u <= map.cols) || !(v <= map.rows))
        throw std::out_of_range("tile_lookup: localization outside the map");
    const auto cell = [](double t, int n) {
        int c = static_cast<int>(std::floor(t));
        if (static_cast<double>(c) == t && c > 0) --c;
        return c >= n ? n - 1 : c;
    };
    return map.tiles[static_cast<std::size_t>(cell(v, map.rows)) * map.cols + cell(u, map.cols)];
}

/// Threshold segmenter for synthetic scenes whose roads are darker than the
/// surroundings: mask = 1 where intensity < threshold.
inline Raster segment_toy(const Raster& image, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("segment_toy: threshold must be in (0,1)");
    Raster mask(image.width, image.height);
    for (std::size_t i = 0; i < image.data.size(); ++i)
        mask.data[i] = image.data[i] < threshold ? 1.0 : 0.0;
    return mask;
}

/// Feasible region in the ground frame: the received road mask, binarized.
/// Pixels the warp never covered decode to 0, so the valid-warp support
/// intersection is already encoded in the mask.
inline Raster feasible_region(const Raster& sensor, const Raster& warped_mask) {
    if (!sensor.same_dims(warped_mask))
        throw std::invalid_argument("feasible_region: dimension mismatch");
    return binarize(warped_mask, 0.5);
}

struct GpsNoiseModel {
    double position_sigma_m = 0.0;   // Gaussian, meters
    double heading_range_rad = 0.0;  // uniform half-width
    double scale_sigma = 0.0;        // lognormal, relative
    std::uint64_t seed = 0;
};

/// GPS-derived prior: the true pose perturbed by heading, scale and position
/// noise. Deterministic per seed; zero noise reproduces the pose exactly.
inline Sim2 gps_initial_transform(const Sim2& true_pose, const GpsNoiseModel& noise,
                                  double meters_per_pixel) {
    if (noise.position_sigma_m < 0.0 || noise.heading_range_rad < 0.0 || noise.scale_sigma < 0.0)
        throw std::invalid_argument("gps_initial_transform: noise magnitudes must be non-negative");
    if (!(meters_per_pixel > 0.0))
        throw std::invalid_argument("gps_initial_transform: meters_per_pixel must be positive");
    std::mt19937_64 gen(noise.seed);
    const double dtheta = uniform_range(gen, -noise.heading_range_rad, noise.heading_range_rad);
    const double scale_factor = std::exp(noise.scale_sigma * gaussian(gen));
    const double sigma_px = noise.position_sigma_m / meters_per_pixel;
    const double dx = sigma_px * gaussian(gen);
    const double dy = sigma_px * gaussian(gen);
    return Sim2(true_pose.s * scale_factor, true_pose.theta + dtheta, true_pose.tx + dx,
                true_pose.ty + dy);
}

}  // namespace skyreg
