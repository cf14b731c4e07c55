#include "mpyro/pipeline.hpp"

#include "mpyro/synth.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace mpyro {

std::pair<std::uint64_t, std::uint64_t> window_frames(double start_ms, double end_ms, std::uint32_t fps,
                                                      std::uint64_t frame_count) {
    if (start_ms > end_ms)
        throw ArgumentError("window start must not exceed its end");
    if (fps == 0)
        throw ArgumentError("fps must be positive");
    // First index whose timestamp is >= t, corrected for rounding of the estimate.
    auto first_at_or_after = [&](double t) -> std::uint64_t {
        if (t <= 0.0)
            return 0;
        const double est = std::ceil(t * fps / 1000.0);
        auto i = static_cast<std::uint64_t>(std::max(0.0, est));
        while (i > 0 && frame_timestamp_ms(i - 1, fps) >= t)
            --i;
        while (frame_timestamp_ms(i, fps) < t)
            ++i;
        return i;
    };
    const auto first = std::min(first_at_or_after(start_ms), frame_count);
    const auto last = std::min(first_at_or_after(end_ms), frame_count);
    return {first, std::max(first, last)};
}

namespace {

// Runs fn(i) for i in [0, n) on `workers` threads, the caller included.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& fn) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
            fn(i);
    };
    std::vector<std::jthread> threads;
    const int extra = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n)) - 1;
    threads.reserve(static_cast<std::size_t>(extra));
    for (int t = 0; t < extra; ++t)
        threads.emplace_back(work);
    work();
}

} // namespace

PipelineReport run_pipeline(FrameSource& source, const PipelineConfig& cfg, const PipelineRunOptions& options,
                            const ResultSink& sink) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const StreamHeader& header = source.header();
    const ObserveParams params = cfg.observe_params(header, options.full_path);

    PipelineReport report;
    report.workers = cfg.effective_workers();

    std::uint64_t end_index = header.frame_count;
    if (options.window_ms) {
        const auto [first, last] =
            window_frames(options.window_ms->first, options.window_ms->second, header.fps, header.frame_count);
        source.seek(first);
        end_index = last;
    }

    std::vector<Frame> batch;
    std::vector<FrameResult> results;
    batch.reserve(cfg.in_flight);
    bool done = false;
    while (!done) {
        batch.clear();
        try {
            while (batch.size() < cfg.in_flight) {
                auto f = source.next();
                if (!f || f->index >= end_index) {
                    done = true;
                    break;
                }
                batch.push_back(std::move(*f));
            }
        } catch (const TruncationError& e) {
            report.decode_error = e.what();
            report.decode_error_frame = e.frame_index();
            done = true;
        } catch (const FormatError& e) {
            report.decode_error = e.what();
            report.decode_error_frame = batch.empty() ? report.frames : batch.back().index + 1;
            done = true;
        }

        results.assign(batch.size(), FrameResult{});
        parallel_for(batch.size(), report.workers,
                     [&](std::size_t i) { results[i] = observe_frame(batch[i], cfg.optics, params); });

        for (const auto& r : results) {
            ++report.frames;
            ++report.status_counts[to_string(r.observation.status)];
            if (r.observation.registration.accepted)
                ++report.registrations_accepted;
            if (options.maps_dir && r.map) {
                write_temperature_map(*options.maps_dir, r.observation.frame_index, *r.map, options.map_kelvin_scale);
                ++report.maps_written;
            }
            if (sink)
                sink(r);
        }
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

VectorFrameSource::VectorFrameSource(StreamHeader header, std::vector<Frame> frames)
    : header_(header), frames_(std::move(frames)) {
    header_.frame_count = frames_.size();
}

std::optional<Frame> VectorFrameSource::next() {
    if (next_ >= frames_.size())
        return std::nullopt;
    return frames_[next_++];
}

void VectorFrameSource::seek(std::uint64_t index) {
    if (index > frames_.size())
        throw ArgumentError("seek beyond the end of the frame set");
    next_ = static_cast<std::size_t>(index);
}

const BenchRow* BenchReport::find(const std::string& path, int workers) const {
    for (const auto& r : rows)
        if (r.path == path && r.workers == workers)
            return &r;
    return nullptr;
}

BenchReport run_bench(const PipelineConfig& cfg, const BenchOptions& options) {
    BenchReport report;
    report.hardware_threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<int> counts = options.worker_counts;
    if (counts.empty()) {
        counts = {1, 2, 4};
        if (report.hardware_threads != 1 && report.hardware_threads != 2 && report.hardware_threads != 4)
            counts.push_back(static_cast<int>(report.hardware_threads));
    }

    SyntheticScene scene;
    scene.match_optics(cfg.optics);
    scene.peak_k = 3000.0;
    scene.peak_counts = 3000.0;
    scene.noise_sigma = 20.0;
    scene.seed = options.seed;
    SyntheticLayerScript script;
    script.geometry = FrameGeometry::from(cfg.optics);
    script.geometry.split_column = cfg.split_column;
    const std::uint64_t total = std::max(options.fast_frames, options.full_frames);
    script.segments.push_back({total * 1000.0 / script.fps, scene});
    ScriptFrameSource generator(script);
    std::vector<Frame> frames;
    frames.reserve(total);
    while (auto f = generator.next())
        frames.push_back(std::move(*f));

    for (const bool full : {false, true}) {
        const std::uint64_t n = full ? options.full_frames : options.fast_frames;
        if (n == 0)
            continue;
        std::vector<Frame> subset(frames.begin(), frames.begin() + static_cast<std::ptrdiff_t>(n));
        for (const int w : counts) {
            PipelineConfig c = cfg;
            c.workers = w;
            VectorFrameSource src(generator.header(), subset);
            PipelineRunOptions opts;
            opts.full_path = full;
            const auto r = run_pipeline(src, c, opts, nullptr);
            report.rows.push_back({full ? "full" : "fast", w, r.frames, r.seconds,
                                   r.seconds > 0.0 ? static_cast<double>(r.frames) / r.seconds : 0.0});
        }
    }
    return report;
}

nlohmann::json to_json(const PipelineReport& report) {
    nlohmann::json j{{"frames", report.frames},
                     {"status_counts", report.status_counts},
                     {"registrations_accepted", report.registrations_accepted},
                     {"maps_written", report.maps_written},
                     {"seconds", report.seconds},
                     {"workers", report.workers}};
    if (report.decode_error) {
        j["decode_error"] = *report.decode_error;
        j["decode_error_frame"] = *report.decode_error_frame;
    }
    return j;
}

nlohmann::json to_json(const BenchReport& report) {
    nlohmann::json j;
    j["hardware_threads"] = report.hardware_threads;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : report.rows)
        j["rows"].push_back({{"path", r.path},
                             {"workers", r.workers},
                             {"frames", r.frames},
                             {"seconds", r.seconds},
                             {"frames_per_second", r.frames_per_second}});
    const auto* f1 = report.find("fast", 1);
    const auto* f4 = report.find("fast", 4);
    if (f1 && f4 && f1->frames_per_second > 0.0)
        j["fast_scaling_1_to_4"] = f4->frames_per_second / f1->frames_per_second;
    return j;
}

} // namespace mpyro
