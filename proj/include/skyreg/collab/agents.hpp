#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "skyreg/collab/wire.hpp"
#include "skyreg/collab/world.hpp"
#include "skyreg/registration.hpp"
#include "skyreg/warp.hpp"

namespace skyreg {

/// A message arrived that the protocol does not allow in the current state.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DroneRefinement {
    Sim2 transform;               // refined tile-to-ground alignment
    bool used_fallback = false;   // kept the GPS prior because confidence was low
    double rot_confidence = 0.0;
    double trans_confidence = 0.0;
    bool resolved_by_flip = false;
    double register_ms = 0.0;
};

/// Drone side of the protocol. Expects a localization, then the ground
/// sensor image; replies with the road segmentation re-aligned into the
/// ground robot's frame.
class DroneAgent {
public:
    DroneAgent(GlobalMap map, Sim2 gps_initial, PipelineConfig cfg = {}, double segment_threshold = 0.5)
        : map_(std::move(map)),
          gps_initial_(gps_initial),
          cfg_(std::move(cfg)),
          segment_threshold_(segment_threshold) {}

    std::vector<Frame> handle_frame(const Frame& frame) {
        const WireMessage msg = decode_frame(frame);
        switch (msg.tag) {
            case MessageTag::localization: {
                if (phase_ != Phase::await_localization)
                    throw ProtocolError("drone: unexpected localization message");
                const Localization loc = parse_localization(msg);
                tile_ = &tile_lookup(map_, loc.world_x, loc.world_y);
                phase_ = Phase::await_sensor_image;
                return {};
            }
            case MessageTag::sensor_image: {
                if (phase_ != Phase::await_sensor_image)
                    throw ProtocolError("drone: sensor image before localization");
                const Raster sensor = parse_image_message(msg);
                const Raster seg = tile_->segmentation.empty()
                                       ? segment_toy(tile_->image, segment_threshold_)
                                       : tile_->segmentation;
                const RegistrationEstimate est = register_images(sensor, seg, cfg_);
                DroneRefinement ref;
                ref.rot_confidence = est.rot_confidence;
                ref.trans_confidence = est.trans_confidence;
                ref.resolved_by_flip = est.ambiguity_resolved_by_flip;
                ref.register_ms = est.elapsed_ms;
                if (std::min(est.rot_confidence, est.trans_confidence) < cfg_.min_confidence) {
                    ref.transform = gps_initial_;
                    ref.used_fallback = true;
                } else {
                    ref.transform = est.transform;
                }
                refinement_ = ref;
                const Raster warped = binarize(warp(seg, ref.transform, sensor.width, sensor.height));
                phase_ = Phase::done;
                return {encode_frame(make_image_message(MessageTag::segmented_image, warped))};
            }
            case MessageTag::segmented_image:
                throw ProtocolError("drone: unexpected segmented-image message");
        }
        throw ProtocolError("drone: unhandled message tag");
    }

    const std::optional<DroneRefinement>& refinement() const { return refinement_; }

private:
    enum class Phase { await_localization, await_sensor_image, done };

    GlobalMap map_;
    Sim2 gps_initial_;
    PipelineConfig cfg_;
    double segment_threshold_;
    Phase phase_ = Phase::await_localization;
    const MapTile* tile_ = nullptr;
    std::optional<DroneRefinement> refinement_;
};

/// Ground robot side: sends its localization and sensor image, then turns
/// the segmented reply into the feasible-region mask.
class GroundAgent {
public:
    GroundAgent(double world_x, double world_y, Raster sensor_image)
        : world_x_(world_x), world_y_(world_y), sensor_(std::move(sensor_image)) {}

    std::vector<Frame> start() {
        if (phase_ != Phase::idle) throw ProtocolError("ground: protocol already started");
        phase_ = Phase::awaiting_reply;
        return {encode_frame(make_localization_message(world_x_, world_y_)),
                encode_frame(make_image_message(MessageTag::sensor_image, sensor_))};
    }

    void handle_frame(const Frame& frame) {
        const WireMessage msg = decode_frame(frame);
        if (phase_ == Phase::idle) throw ProtocolError("ground: reply before the request was sent");
        if (phase_ == Phase::done) throw ProtocolError("ground: duplicate reply");
        if (msg.tag != MessageTag::segmented_image)
            throw ProtocolError("ground: expected a segmented-image reply");
        feasible_ = feasible_region(sensor_, parse_image_message(msg));
        phase_ = Phase::done;
    }

    /// Empty until the segmented reply has been processed.
    const Raster& feasible() const { return feasible_; }
    const Raster& sensor() const { return sensor_; }

private:
    enum class Phase { idle, awaiting_reply, done };

    double world_x_;
    double world_y_;
    Raster sensor_;
    Phase phase_ = Phase::idle;
    Raster feasible_;
};

}  // namespace skyreg
