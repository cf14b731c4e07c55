#pragma once

// Ground-truth frame rendering from the two-channel Wien forward model.
//
// Scene coordinates are the 620 nm sub-image's pixel grid. The 550 nm channel
// sees the scene through applied_transform: its pixel p samples the scene at
// c + t^-1(p - c), c being the sub-image centre, so that registration of the
// 550 nm sub-image onto the 620 nm one recovers t.

#include "mpyro/frame_io.hpp"
#include "mpyro/radiometry.hpp"
#include "mpyro/registration.hpp"

#include <json.hpp>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mpyro {

enum class BlobProfile {
    uniform,  // peak_k inside the 1-sigma ellipse, background_k outside
    gaussian, // background_k + (peak_k - background_k) * exp(-rho^2 / 2)
};

struct SyntheticScene {
    BlobProfile profile = BlobProfile::uniform;
    double peak_k = 3000.0;
    double background_k = 0.0;
    std::optional<Vec2> center; // default: sub-image centre
    double sigma_x = 10.0;      // px
    double sigma_y = 5.0;       // px
    /// Optional explicit temperature field (kelvin, sub-image sized); replaces the blob.
    std::optional<Grid<double>> temperature_field;

    double emissivity_550 = 1.0;
    double emissivity_620 = 1.0;
    double transmission_550 = 1.601; // A1
    double transmission_620 = 1.0;   // A2

    /// Brighter channel's brightest pixel in native counts. Overrides exposure_scale.
    std::optional<double> peak_counts = 3000.0;
    double exposure_scale = 0.0; // native counts per unit radiance
    double noise_sigma = 0.0;    // native counts

    SimilarityTransform applied_transform;
    std::uint64_t seed = 0;
    bool planck = false; // render with Planck's law instead of Wien's
    int supersample = 4;
    /// Gaussian optical blur applied to each channel on the sensor, in pixels.
    /// Identical in both channels, so a uniform temperature keeps a uniform ratio.
    double psf_sigma = 1.0;

    /// Sets transmissions and emissivities so that A1/A2 and e1/e2 match cfg.
    void match_optics(const OpticsConfig& cfg);
    void validate() const;
};

struct FrameGeometry {
    std::uint32_t width = 128;
    std::uint32_t height = 48;
    int split_column = 64;
    double lambda_550 = 550e-9;
    double lambda_620 = 620e-9;
    PhysicalConstants constants = PhysicalConstants::codata();

    static FrameGeometry from(const OpticsConfig& cfg);
};

struct RenderedFrame {
    Frame frame;        // 16-bit counts (native 12-bit x 16)
    bool saturated = false;
};

/// Temperature of the scene at scene coordinates (x, y).
double scene_temperature(const SyntheticScene& scene, const FrameGeometry& geom, double x, double y);

RenderedFrame render_pair(const SyntheticScene& scene, const FrameGeometry& geom = {},
                          std::uint64_t frame_index = 0);

/// Ground-truth melt-pool footprint in 620 nm sub-image coordinates: pixel
/// centres inside the 1-sigma ellipse (or above zero for explicit fields).
Mask footprint(const SyntheticScene& scene, const FrameGeometry& geom = {});

/// Exposure (native counts per unit radiance) the renderer will use.
double effective_exposure(const SyntheticScene& scene, const FrameGeometry& geom);

struct ScriptSegment {
    double duration_ms = 0.0;
    std::optional<SyntheticScene> scene; // absent: laser off
};

struct SyntheticLayerScript {
    std::uint32_t fps = 30000;
    FrameGeometry geometry;
    float pixel_pitch_um = 20.0f;
    std::vector<ScriptSegment> segments;

    std::uint64_t frame_count() const;
    /// Frames in segment i: round(duration_ms * fps / 1000).
    std::uint64_t segment_frames(std::size_t i) const;
    void validate() const;
};

/// Renders a script lazily as a 12-bit frame source. Noise-free frames of a
/// segment are computed once; noise is drawn per frame from (seed, index).
class ScriptFrameSource final : public FrameSource {
public:
    explicit ScriptFrameSource(SyntheticLayerScript script);

    const StreamHeader& header() const override { return header_; }
    std::optional<Frame> next() override;
    std::optional<RenderedFrame> next_rendered();
    void seek(std::uint64_t index) override;

private:
    SyntheticLayerScript script_;
    StreamHeader header_;
    std::vector<std::uint64_t> starts_;
    std::uint64_t next_index_ = 0;
    std::size_t cached_segment_ = static_cast<std::size_t>(-1);
    std::vector<double> cached_;
};

/// Writes a 12-bit MPV1 stream. IoError on a failed sink.
StreamHeader render_stream(const SyntheticLayerScript& script, std::ostream& sink);

/// Calls `emit` with each rendered frame in order, without an output stream.
void render_frames(const SyntheticLayerScript& script, const std::function<void(const RenderedFrame&)>& emit);

/// JSON documents: see docs/synth_schema.md. ConfigError messages start with a
/// JSON pointer to the offending field.
SyntheticScene scene_from_json(const nlohmann::json& j, const OpticsConfig& cfg, const std::string& pointer = "");
SyntheticLayerScript script_from_json(const nlohmann::json& j);

} // namespace mpyro
