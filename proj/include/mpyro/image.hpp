#pragma once

#include "mpyro/errors.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mpyro {

struct Pixel {
    int x = 0;
    int y = 0;
    friend bool operator==(Pixel, Pixel) = default;
};

/// Dense row-major 2-D grid.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height) {
        if (width < 0 || height < 0)
            throw ArgumentError("grid dimensions must be non-negative");
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }
    Grid(int width, int height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (width < 0 || height < 0
            || data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw ArgumentError("grid data size does not match dimensions");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }

    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    std::span<T> row(int y) { return {data_.data() + index(0, y), static_cast<std::size_t>(width_)}; }
    std::span<const T> row(int y) const {
        return {data_.data() + index(0, y), static_cast<std::size_t>(width_)};
    }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using Image = Grid<float>;
using Mask = Grid<std::uint8_t>;

enum class Channel { wl550, wl620 };

std::string to_string(Channel c);

/// One wavelength's half of a camera frame.
struct SubImage {
    Channel channel = Channel::wl620;
    Image pixels;
    Pixel origin; // offset of pixel (0, 0) inside the parent frame

    int width() const noexcept { return pixels.width(); }
    int height() const noexcept { return pixels.height(); }
};

/// Bilinear sample at continuous pixel coordinates. Returns false when
/// (x, y) lies outside [0, w-1] x [0, h-1].
bool sample_bilinear(const Image& img, double x, double y, double& out);

} // namespace mpyro
