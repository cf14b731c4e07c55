#pragma once

// Ratio and temperature maps, per-frame melt-pool observations, and
// layer-level analytics over observation series.

#include "mpyro/frame_io.hpp"
#include "mpyro/radiometry.hpp"
#include "mpyro/registration.hpp"
#include "mpyro/segmentation.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mpyro {

struct ThermographyLimits {
    double floor_k = 1300.0;   // lowest detectable temperature
    double ceiling_k = 6000.0; // above this a temperature is considered unrealistic
    double gap_min_ms = 100.0; // laser-off time separating two bars

    void validate() const;
};

struct RatioMap {
    Image values; // i550 / i620 where valid, 0 elsewhere
    Mask valid;   // both channels at or above the floor
    Image i550;
    Image i620;
};

/// Per-pixel quotient where both channels are >= floor.
RatioMap ratio_map(const SubImage& warped550, const SubImage& ref620, double floor);

enum class PixelStatus : std::uint8_t {
    background = 0,
    valid = 1,
    below_floor = 2,
    above_range = 3,
    suspect = 4,
};

std::string to_string(PixelStatus s);

struct TemperatureMap {
    Grid<double> kelvin; // 0 where no temperature exists
    Grid<std::uint8_t> status;
    std::optional<Grid<double>> uncertainty; // U_T in K, valid pixels only

    PixelStatus status_at(int x, int y) const { return static_cast<PixelStatus>(status(x, y)); }
    std::size_t count(PixelStatus s) const;
    /// Mean kelvin over valid pixels; nullopt when there are none.
    std::optional<double> mean_valid() const;
};

/// With a positive quantization_step, per-pixel U_T is filled from the
/// sensor quantization model.
TemperatureMap temperature_map(const RatioMap& rm, const OpticsConfig& cfg, const ThermographyLimits& limits = {},
                               double quantization_step = 0.0);

enum class ObservationStatus {
    ok,
    laser_off,      // no melt pool in either channel
    single_channel, // melt pool in one channel only
    below_floor,    // temperature below the detectable floor
    above_range,    // ratio at or above the singular ratio
    suspect,        // temperature above the ceiling
    error,
};

std::string to_string(ObservationStatus s);
ObservationStatus observation_status_from_string(const std::string& s);

enum class AverageMode { ratio_of_means, mean_of_ratios };

struct RegistrationSummary {
    bool attempted = false;
    bool accepted = false;
    double ssim = 0.0;
    SimilarityTransform transform;
    std::string reason;
};

struct MeltPoolObservation {
    std::uint64_t frame_index = 0;
    double timestamp_ms = 0.0;
    std::optional<double> mean_i550;
    std::optional<double> mean_i620;
    std::optional<double> i12;
    std::optional<double> t_k;
    std::optional<double> u_t;
    std::optional<Morphology> morphology; // of the 620 nm reference region
    RegistrationSummary registration;
    ObservationStatus status = ObservationStatus::laser_off;
    std::string message;

    bool melt_pool_present() const {
        return status != ObservationStatus::laser_off && status != ObservationStatus::error;
    }
};

struct ObserveParams {
    int split_column = 64;
    SegmentationParams segmentation;
    RegistrationParams registration;
    ThermographyLimits limits;
    AverageMode average_mode = AverageMode::ratio_of_means;
    bool full_path = false; // register and compute the pixel-wise map
    double quantization_step = 1.0; // decoded counts per native sensor step
    double pixel_pitch_um = 20.0;
};

struct FrameResult {
    MeltPoolObservation observation;
    std::optional<TemperatureMap> map; // full path with accepted registration only
};

/// Never throws for bad frame content: failures become observation statuses.
FrameResult observe_frame(const Frame& frame, const OpticsConfig& cfg, const ObserveParams& params);

struct BarSegment {
    int bar_index = 0;
    std::uint64_t start_frame = 0; // inclusive
    std::uint64_t end_frame = 0;   // inclusive
    double start_ms = 0.0;
    double end_ms = 0.0;
    std::size_t first = 0; // position of the first observation in the series
    std::size_t last = 0;  // position of the last observation in the series
};

/// Runs of melt-pool-present observations; laser-off stretches shorter than
/// gap_min_ms (measured between the surrounding present frames) are bridged.
std::vector<BarSegment> segment_bars(std::span<const MeltPoolObservation> series, double gap_min_ms = 100.0);

/// Observations with timestamp in [start_ms, end_ms). The series must be time
/// ordered. ArgumentError when start_ms > end_ms.
std::span<const MeltPoolObservation> extract_window(std::span<const MeltPoolObservation> series, double start_ms,
                                                    double end_ms);

struct Histogram {
    std::vector<double> edges;
    std::vector<double> bins; // edges.size() - 1 interior bins
    double underflow = 0.0;
    double overflow = 0.0;
    std::size_t total = 0;
};

/// i12 of every observation carrying a ratio, normalized by their count.
/// Bins are [e_i, e_i+1); the last edge belongs to the overflow bin.
Histogram i12_histogram(std::span<const MeltPoolObservation> series, std::span<const double> bin_edges);

/// Centred mean with truncated edges. ArgumentError unless window is odd and >= 1.
std::vector<double> moving_average(std::span<const double> values, int window);

/// Per-bar temperature statistics and boundaries.
nlohmann::json layer_summary(std::span<const MeltPoolObservation> series, std::span<const BarSegment> bars);

// Per-frame CSV.
void write_observation_header(std::ostream& out);
void write_observation_row(std::ostream& out, const MeltPoolObservation& obs);
std::vector<MeltPoolObservation> read_observations_csv(std::istream& in);
std::vector<MeltPoolObservation> read_observations_csv_file(const std::filesystem::path& path);

/// 16-bit PGM of round(kelvin * scale) (0 for non-valid pixels) and a sidecar
/// CSV of x,y,kelvin,status. Returns the PGM path.
std::filesystem::path write_temperature_map(const std::filesystem::path& dir, std::uint64_t frame_index,
                                            const TemperatureMap& map, double kelvin_scale = 10.0);

} // namespace mpyro
