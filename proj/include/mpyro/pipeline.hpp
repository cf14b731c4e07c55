#pragma once

// Streaming frame processing: one reader, N workers over a bounded in-flight
// window, results delivered to the sink in frame order.

#include "mpyro/config.hpp"
#include "mpyro/frame_io.hpp"
#include "mpyro/thermography.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mpyro {

struct PipelineRunOptions {
    bool full_path = false;
    std::optional<std::pair<double, double>> window_ms; // [start, end)
    std::optional<std::filesystem::path> maps_dir;
    double map_kelvin_scale = 10.0;
};

struct PipelineReport {
    std::uint64_t frames = 0;
    std::map<std::string, std::uint64_t> status_counts;
    std::uint64_t registrations_accepted = 0;
    std::uint64_t maps_written = 0;
    std::optional<std::string> decode_error;
    std::optional<std::uint64_t> decode_error_frame;
    double seconds = 0.0;
    int workers = 1;
};

using ResultSink = std::function<void(const FrameResult&)>;

/// First and one-past-last frame index with timestamp in [start_ms, end_ms).
std::pair<std::uint64_t, std::uint64_t> window_frames(double start_ms, double end_ms, std::uint32_t fps,
                                                      std::uint64_t frame_count);

/// Decode errors stop the run after every frame read so far has been
/// delivered; they are reported, not thrown.
PipelineReport run_pipeline(FrameSource& source, const PipelineConfig& cfg, const PipelineRunOptions& options,
                            const ResultSink& sink);

/// Frames held in memory.
class VectorFrameSource final : public FrameSource {
public:
    VectorFrameSource(StreamHeader header, std::vector<Frame> frames);

    const StreamHeader& header() const override { return header_; }
    std::optional<Frame> next() override;
    void seek(std::uint64_t index) override;

private:
    StreamHeader header_;
    std::vector<Frame> frames_;
    std::size_t next_ = 0;
};

struct BenchOptions {
    std::uint64_t fast_frames = 20000;
    std::uint64_t full_frames = 300;
    std::vector<int> worker_counts; // empty: {1, 2, 4, hardware concurrency}
    std::uint64_t seed = 7;
};

struct BenchRow {
    std::string path; // "fast" or "full"
    int workers = 1;
    std::uint64_t frames = 0;
    double seconds = 0.0;
    double frames_per_second = 0.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    unsigned hardware_threads = 0;

    const BenchRow* find(const std::string& path, int workers) const;
};

/// Processes in-memory synthetic frames (decode cost excluded) on both paths.
BenchReport run_bench(const PipelineConfig& cfg, const BenchOptions& options);

nlohmann::json to_json(const PipelineReport& report);
nlohmann::json to_json(const BenchReport& report);

} // namespace mpyro
