#include "mpyro/frame_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>
#include <sstream>

namespace mpyro {

namespace {

constexpr std::array<char, 4> kMagic{'M', 'P', 'V', '1'};

template <typename T>
T load_le(const unsigned char* p) {
    T v{};
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v = static_cast<T>(v | (static_cast<T>(p[i]) << (8 * i)));
    return v;
}

template <typename T>
void store_le(unsigned char* p, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
}

} // namespace

void StreamHeader::validate() const {
    if (width == 0 || height == 0)
        throw FormatError("stream dimensions must be positive");
    if (fps == 0)
        throw FormatError("stream fps must be positive");
    if (bit_depth != 12 && bit_depth != 16)
        throw FormatError("bit depth must be 12 or 16, got " + std::to_string(bit_depth));
    if (!(pixel_pitch_um > 0.0f))
        throw FormatError("pixel pitch must be positive");
}

double frame_timestamp_ms(std::uint64_t index, std::uint32_t fps) {
    return static_cast<double>(index) * 1000.0 / static_cast<double>(fps);
}

std::uint16_t upscale_12_to_16(std::uint16_t value) {
    if (value > 4095)
        throw RangeError("12-bit value out of range: " + std::to_string(value));
    return static_cast<std::uint16_t>(value << 4);
}

std::pair<SubImage, SubImage> split_frame(const Frame& frame, int split_column) {
    const int w = frame.pixels.width();
    const int h = frame.pixels.height();
    if (split_column <= 0 || split_column >= w)
        throw ArgumentError("split column " + std::to_string(split_column) + " outside (0, "
                            + std::to_string(w) + ")");
    SubImage left{Channel::wl620, Image(split_column, h), Pixel{0, 0}};
    SubImage right{Channel::wl550, Image(w - split_column, h), Pixel{split_column, 0}};
    for (int y = 0; y < h; ++y) {
        const auto src = frame.pixels.row(y);
        std::copy(src.begin(), src.begin() + split_column, left.pixels.row(y).begin());
        std::copy(src.begin() + split_column, src.end(), right.pixels.row(y).begin());
    }
    return {std::move(left), std::move(right)};
}

// --- MPV1 decoding ---------------------------------------------------------

StreamDecoder::StreamDecoder(std::istream& in) : in_(in) {
    std::array<unsigned char, kMpv1HeaderSize> buf{};
    in_.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (in_.gcount() < 4 || std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0)
        throw FormatError("not an MPV1 stream (bad magic)");
    if (static_cast<std::size_t>(in_.gcount()) != buf.size())
        throw FormatError("truncated MPV1 header");
    header_.width = load_le<std::uint32_t>(buf.data() + 4);
    header_.height = load_le<std::uint32_t>(buf.data() + 8);
    header_.fps = load_le<std::uint32_t>(buf.data() + 12);
    header_.bit_depth = load_le<std::uint16_t>(buf.data() + 16);
    header_.frame_count = load_le<std::uint64_t>(buf.data() + 20);
    header_.pixel_pitch_um = std::bit_cast<float>(load_le<std::uint32_t>(buf.data() + 28));
    header_.validate();
    raw_.resize(header_.pixels_per_frame() * 2);
}

std::optional<Frame> StreamDecoder::next() {
    if (next_index_ >= header_.frame_count)
        return std::nullopt;

    const std::size_t n = header_.pixels_per_frame();
    auto& bytes = raw_;
    in_.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in_.gcount()) != bytes.size())
        throw TruncationError(next_index_, "stream truncated at frame " + std::to_string(next_index_)
                                               + " (last complete frame "
                                               + (next_index_ == 0 ? std::string("none")
                                                                   : std::to_string(next_index_ - 1))
                                               + ")");

    Frame frame;
    frame.index = next_index_;
    frame.timestamp_ms = frame_timestamp_ms(next_index_, header_.fps);
    std::vector<std::uint16_t> px(n);
    const bool native12 = header_.bit_depth == 12;
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = load_le<std::uint16_t>(bytes.data() + 2 * i);
        if (native12) {
            if (v > 4095)
                throw FormatError("frame " + std::to_string(next_index_) + ": 12-bit sample out of range");
            px[i] = static_cast<std::uint16_t>(v << 4);
        } else {
            px[i] = v;
        }
    }
    frame.pixels = Grid<std::uint16_t>(static_cast<int>(header_.width), static_cast<int>(header_.height),
                                       std::move(px));
    ++next_index_;
    return frame;
}

void StreamDecoder::seek(std::uint64_t index) {
    index = std::min(index, header_.frame_count);
    const auto offset = kMpv1HeaderSize + index * header_.pixels_per_frame() * 2;
    in_.clear();
    in_.seekg(static_cast<std::streamoff>(offset), std::ios::beg);
    if (!in_)
        throw IoError("stream is not seekable");
    next_index_ = index;
}

FileStreamSource::FileStreamSource(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw IoError("file not found: " + path.string());
    auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*file)
        throw IoError("cannot open " + path.string());
    file_ = std::move(file);
    decoder_ = std::make_unique<StreamDecoder>(*file_);
}

FileStreamSource::~FileStreamSource() = default;

// --- MPV1 encoding ---------------------------------------------------------

StreamEncoder::StreamEncoder(std::ostream& out, const StreamHeader& header) : out_(out), header_(header) {
    header_.validate();
    std::array<unsigned char, kMpv1HeaderSize> buf{};
    std::memcpy(buf.data(), kMagic.data(), kMagic.size());
    store_le<std::uint32_t>(buf.data() + 4, header_.width);
    store_le<std::uint32_t>(buf.data() + 8, header_.height);
    store_le<std::uint32_t>(buf.data() + 12, header_.fps);
    store_le<std::uint16_t>(buf.data() + 16, header_.bit_depth);
    store_le<std::uint16_t>(buf.data() + 18, 0);
    store_le<std::uint64_t>(buf.data() + 20, header_.frame_count);
    store_le<std::uint32_t>(buf.data() + 28, std::bit_cast<std::uint32_t>(header_.pixel_pitch_um));
    out_.write(reinterpret_cast<const char*>(buf.data()), buf.size());
    if (!out_)
        throw IoError("failed to write MPV1 header");
    buffer_.resize(header_.pixels_per_frame() * 2);
}

void StreamEncoder::write(const Frame& frame) {
    if (written_ >= header_.frame_count)
        throw ArgumentError("more frames written than declared in the header");
    if (frame.pixels.width() != static_cast<int>(header_.width)
        || frame.pixels.height() != static_cast<int>(header_.height))
        throw ArgumentError("frame dimensions do not match the stream header");
    const auto values = frame.pixels.values();
    const bool native12 = header_.bit_depth == 12;
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint16_t v = values[i];
        if (native12) {
            if (v & 0xF)
                throw ArgumentError("12-bit stream frames must hold upscaled (x16) values");
            v = static_cast<std::uint16_t>(v >> 4);
        }
        store_le<std::uint16_t>(buffer_.data() + 2 * i, v);
    }
    out_.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
    if (!out_)
        throw IoError("failed to write frame " + std::to_string(written_));
    ++written_;
}

void StreamEncoder::finish() {
    if (written_ != header_.frame_count)
        throw ArgumentError("header declares " + std::to_string(header_.frame_count) + " frames but "
                            + std::to_string(written_) + " were written");
    out_.flush();
    if (!out_)
        throw IoError("failed to flush MPV1 stream");
}

void encode_stream(std::ostream& out, const StreamHeader& header, std::span<const Frame> frames) {
    StreamHeader h = header;
    h.frame_count = frames.size();
    StreamEncoder enc(out, h);
    for (const auto& f : frames)
        enc.write(f);
    enc.finish();
}

// --- PGM -------------------------------------------------------------------

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n')
                c = in.get();
        } else if (std::isspace(c)) {
            if (!tok.empty())
                return tok;
        } else {
            tok.push_back(static_cast<char>(c));
        }
        c = in.get();
    }
    return tok;
}

unsigned long pgm_number(std::istream& in, const char* what) {
    const auto tok = pgm_token(in);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
        throw FormatError(std::string("PGM: bad ") + what);
    return std::stoul(tok);
}

} // namespace

Grid<std::uint16_t> read_pgm(std::istream& in) {
    if (pgm_token(in) != "P5")
        throw FormatError("PGM: only binary P5 files are supported");
    const auto w = pgm_number(in, "width");
    const auto h = pgm_number(in, "height");
    const auto maxval = pgm_number(in, "maxval");
    if (w == 0 || h == 0 || maxval == 0 || maxval > 65535)
        throw FormatError("PGM: invalid header values");
    const std::size_t n = w * h;
    const std::size_t bps = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> bytes(n * bps);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size())
        throw FormatError("PGM: truncated pixel data");
    std::vector<std::uint16_t> px(n);
    for (std::size_t i = 0; i < n; ++i)
        px[i] = bps == 2 ? static_cast<std::uint16_t>((bytes[2 * i] << 8) | bytes[2 * i + 1]) : bytes[i];
    return Grid<std::uint16_t>(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

Grid<std::uint16_t> read_pgm_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    return read_pgm(in);
}

void write_pgm(std::ostream& out, const Grid<std::uint16_t>& img, const std::vector<std::string>& comments) {
    out << "P5\n";
    for (const auto& c : comments)
        out << "# " << c << "\n";
    out << img.width() << " " << img.height() << "\n65535\n";
    std::vector<unsigned char> bytes(img.size() * 2);
    const auto values = img.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        bytes[2 * i] = static_cast<unsigned char>(values[i] >> 8);
        bytes[2 * i + 1] = static_cast<unsigned char>(values[i] & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("failed to write PGM");
}

void write_pgm_file(const std::filesystem::path& path, const Grid<std::uint16_t>& img,
                    const std::vector<std::string>& comments) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot create " + path.string());
    write_pgm(out, img, comments);
}

PgmDirectorySource::PgmDirectorySource(const std::filesystem::path& dir, std::uint32_t fps,
                                       float pixel_pitch_um) {
    if (!std::filesystem::is_directory(dir))
        throw IoError("not a directory: " + dir.string());
    static const std::regex kName(R"(frame_(\d{8})\.pgm)");
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && std::regex_match(entry.path().filename().string(), kName))
            files_.push_back(entry.path());
    std::sort(files_.begin(), files_.end());
    for (std::size_t i = 0; i < files_.size(); ++i) {
        char expected[32];
        std::snprintf(expected, sizeof expected, "frame_%08zu.pgm", i);
        if (files_[i].filename() != expected)
            throw FormatError("PGM sequence has a gap before " + files_[i].filename().string());
    }
    header_.fps = fps;
    header_.bit_depth = 16;
    header_.pixel_pitch_um = pixel_pitch_um;
    header_.frame_count = files_.size();
    if (!files_.empty()) {
        const auto first = read_pgm_file(files_.front());
        header_.width = static_cast<std::uint32_t>(first.width());
        header_.height = static_cast<std::uint32_t>(first.height());
    }
    header_.validate();
}

std::optional<Frame> PgmDirectorySource::next() {
    if (next_index_ >= files_.size())
        return std::nullopt;
    Frame frame;
    frame.index = next_index_;
    frame.timestamp_ms = frame_timestamp_ms(next_index_, header_.fps);
    try {
        frame.pixels = read_pgm_file(files_[next_index_]);
    } catch (const FormatError& e) {
        throw TruncationError(next_index_, files_[next_index_].string() + ": " + e.what());
    }
    if (frame.pixels.width() != static_cast<int>(header_.width)
        || frame.pixels.height() != static_cast<int>(header_.height))
        throw FormatError("frame " + std::to_string(next_index_) + " has different dimensions");
    ++next_index_;
    return frame;
}

void PgmDirectorySource::seek(std::uint64_t index) {
    next_index_ = std::min<std::uint64_t>(index, files_.size());
}

} // namespace mpyro
