#pragma once

// Dual-wavelength frame streams.
//
// MPV1 container, all integers little-endian:
//   offset  size  field
//   0       4     magic "MPV1"
//   4       4     u32 width
//   8       4     u32 height
//   12      4     u32 fps
//   16      2     u16 bit_depth (12 or 16)
//   18      2     u16 reserved (0)
//   20      8     u64 frame_count
//   28      4     f32 pixel_pitch_um
//   32      ...   frame_count frames of width*height u16, row-major
//
// 12-bit payloads store native sensor counts and are upscaled (x16) on decode.

#include "mpyro/image.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mpyro {

struct StreamHeader {
    std::uint32_t width = 128;
    std::uint32_t height = 48;
    std::uint32_t fps = 30000;
    std::uint16_t bit_depth = 16;
    std::uint64_t frame_count = 0;
    float pixel_pitch_um = 20.0f;

    /// Throws FormatError on zero dimensions or fps, or bit depth not in {12, 16}.
    void validate() const;
    std::size_t pixels_per_frame() const { return std::size_t{width} * height; }
    double frame_period_ms() const { return 1000.0 / fps; }
    /// Native quantization step expressed in decoded (16-bit) counts.
    double quantization_step() const { return bit_depth == 12 ? 16.0 : 1.0; }
};

inline constexpr std::size_t kMpv1HeaderSize = 32;

struct Frame {
    std::uint64_t index = 0;
    double timestamp_ms = 0.0;
    Grid<std::uint16_t> pixels;
};

double frame_timestamp_ms(std::uint64_t index, std::uint32_t fps);

/// Native 12-bit count to 16-bit: value * 16. RangeError above 4095.
std::uint16_t upscale_12_to_16(std::uint16_t value);

/// Left part [0, split_column) is the 620 nm channel, right part the 550 nm channel.
std::pair<SubImage, SubImage> split_frame(const Frame& frame, int split_column);

/// Lazy, ordered source of frames.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual const StreamHeader& header() const = 0;
    /// Next frame in index order, or nullopt at end of stream.
    virtual std::optional<Frame> next() = 0;
    /// Positions the source so that next() yields frame `index`.
    virtual void seek(std::uint64_t index) = 0;
};

/// Single-pass MPV1 decoder over a borrowed stream.
class StreamDecoder final : public FrameSource {
public:
    /// Reads and validates the header. FormatError on bad magic or header fields.
    explicit StreamDecoder(std::istream& in);

    const StreamHeader& header() const override { return header_; }
    /// TruncationError when a declared frame is incomplete.
    std::optional<Frame> next() override;
    /// Requires a seekable stream.
    void seek(std::uint64_t index) override;

private:
    std::istream& in_;
    StreamHeader header_;
    std::uint64_t next_index_ = 0;
    std::vector<unsigned char> raw_;
};

/// MPV1 decoder owning its file.
class FileStreamSource final : public FrameSource {
public:
    explicit FileStreamSource(const std::filesystem::path& path);
    ~FileStreamSource() override;

    const StreamHeader& header() const override { return decoder_->header(); }
    std::optional<Frame> next() override { return decoder_->next(); }
    void seek(std::uint64_t index) override { decoder_->seek(index); }

private:
    std::unique_ptr<std::istream> file_;
    std::unique_ptr<StreamDecoder> decoder_;
};

/// Directory of `frame_%08d.pgm` files (P5, 16-bit).
class PgmDirectorySource final : public FrameSource {
public:
    PgmDirectorySource(const std::filesystem::path& dir, std::uint32_t fps, float pixel_pitch_um = 20.0f);

    const StreamHeader& header() const override { return header_; }
    std::optional<Frame> next() override;
    void seek(std::uint64_t index) override;

private:
    std::vector<std::filesystem::path> files_;
    StreamHeader header_;
    std::uint64_t next_index_ = 0;
};

/// Streaming MPV1 writer. The header's frame_count must equal the number of
/// frames written before finish().
class StreamEncoder {
public:
    StreamEncoder(std::ostream& out, const StreamHeader& header);
    /// For 12-bit streams the frame values must be multiples of 16 (upscaled counts).
    void write(const Frame& frame);
    void finish();
    std::uint64_t frames_written() const { return written_; }

private:
    std::ostream& out_;
    StreamHeader header_;
    std::uint64_t written_ = 0;
    std::vector<unsigned char> buffer_;
};

void encode_stream(std::ostream& out, const StreamHeader& header, std::span<const Frame> frames);

/// Binary PGM (P5). maxval <= 255 uses one byte per sample, otherwise two
/// big-endian bytes.
Grid<std::uint16_t> read_pgm(std::istream& in);
Grid<std::uint16_t> read_pgm_file(const std::filesystem::path& path);
/// Writes maxval 65535, two bytes per sample. `comment` lines go into the header.
void write_pgm(std::ostream& out, const Grid<std::uint16_t>& img, const std::vector<std::string>& comments = {});
void write_pgm_file(const std::filesystem::path& path, const Grid<std::uint16_t>& img,
                    const std::vector<std::string>& comments = {});

} // namespace mpyro
