#include "mpyro/segmentation.hpp"

#include <algorithm>
#include <cmath>

namespace mpyro {

void SegmentationParams::validate() const {
    if (!(k_sigma >= 0.0) || !std::isfinite(k_sigma))
        throw ConfigError("segmentation k_sigma must be finite and >= 0");
    if (!(absolute_floor >= 0.0) || !std::isfinite(absolute_floor))
        throw ConfigError("segmentation absolute_floor must be finite and >= 0");
}

Mask MeltPoolRegion::to_mask(int width, int height) const {
    Mask m(width, height, 0);
    for (const auto p : mask)
        if (m.contains(p.x, p.y))
            m(p.x, p.y) = 1;
    return m;
}

bool MeltPoolRegion::contains(Pixel p) const {
    return std::binary_search(mask.begin(), mask.end(), p, [](Pixel a, Pixel b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
}

namespace {

void finish_region(MeltPoolRegion& r, const Image& img) {
    std::sort(r.mask.begin(), r.mask.end(), [](Pixel a, Pixel b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    double sum = 0.0;
    double max = -INFINITY;
    BoundingBox box{r.mask.front().x, r.mask.front().y, r.mask.front().x, r.mask.front().y};
    for (const auto p : r.mask) {
        const double v = img(p.x, p.y);
        sum += v;
        max = std::max(max, v);
        box.x_min = std::min(box.x_min, p.x);
        box.x_max = std::max(box.x_max, p.x);
        box.y_min = std::min(box.y_min, p.y);
        box.y_max = std::max(box.y_max, p.y);
    }
    r.mean_intensity = sum / static_cast<double>(r.mask.size());
    r.max_intensity = max;
    r.bbox = box;
}

} // namespace

std::optional<MeltPoolRegion> segment(const SubImage& sub, const SegmentationParams& params) {
    const Image& img = sub.pixels;
    if (img.empty())
        return std::nullopt;

    // First occurrence of the maximum in row-major order.
    const auto values = img.values();
    const auto max_it = std::max_element(values.begin(), values.end());
    const double max_value = *max_it;
    if (max_value < params.absolute_floor)
        return std::nullopt;
    const auto max_index = static_cast<int>(max_it - values.begin());
    const Pixel peak{max_index % img.width(), max_index / img.width()};

    double sum = 0.0;
    double sum_sq = 0.0;
    for (const float v : values) {
        sum += v;
        sum_sq += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(values.size());
    const double mu = sum / n;
    const double sd = std::sqrt(std::max(0.0, sum_sq / n - mu * mu));
    // The peak always qualifies, even when mean + k sd exceeds it.
    const double threshold = std::min(mu + params.k_sigma * sd, max_value);

    MeltPoolRegion region;
    region.peak = peak;
    Mask visited(img.width(), img.height(), 0);
    std::vector<Pixel> stack{peak};
    visited(peak.x, peak.y) = 1;
    while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        region.mask.push_back(p);
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int x = p.x + dx;
                const int y = p.y + dy;
                if ((dx == 0 && dy == 0) || !img.contains(x, y) || visited(x, y))
                    continue;
                if (img(x, y) >= threshold) {
                    visited(x, y) = 1;
                    stack.push_back({x, y});
                }
            }
        }
    }
    finish_region(region, img);
    return region;
}

namespace {

// Number of steps from the peak the scan may extend in direction (dx, dy).
int scan_extent(const Image& img, Pixel peak, int dx, int dy, double floor) {
    int steps = 0;
    int minimum_at = 0;
    double previous = img(peak.x, peak.y);
    int rising = 0;
    while (true) {
        const int x = peak.x + dx * (steps + 1);
        const int y = peak.y + dy * (steps + 1);
        if (!img.contains(x, y))
            return steps;
        ++steps;
        const double v = img(x, y);
        if (v <= floor)
            return steps;
        if (v > previous) {
            if (++rising >= 2)
                return minimum_at;
        } else {
            rising = 0;
            minimum_at = steps;
        }
        previous = v;
    }
}

} // namespace

MeltPoolRegion grow_boundary(const SubImage& sub, Pixel peak, double floor) {
    const Image& img = sub.pixels;
    if (!img.contains(peak.x, peak.y))
        throw ArgumentError("peak outside the image");
    if (!(img(peak.x, peak.y) > floor))
        throw ArgumentError("peak intensity does not exceed the floor");

    const int right = scan_extent(img, peak, 1, 0, floor);
    const int left = scan_extent(img, peak, -1, 0, floor);
    const int down = scan_extent(img, peak, 0, 1, floor);
    const int up = scan_extent(img, peak, 0, -1, floor);

    MeltPoolRegion region;
    region.peak = peak;
    for (int y = peak.y - up; y <= peak.y + down; ++y)
        for (int x = peak.x - left; x <= peak.x + right; ++x)
            if (img(x, y) > floor)
                region.mask.push_back({x, y});
    finish_region(region, img);
    return region;
}

double mean_intensity(const MeltPoolRegion& region, const SubImage& sub) {
    if (region.mask.empty())
        throw ArgumentError("empty region");
    double sum = 0.0;
    for (const auto p : region.mask) {
        if (!sub.pixels.contains(p.x, p.y))
            throw ArgumentError("region does not belong to this image");
        sum += sub.pixels(p.x, p.y);
    }
    return sum / static_cast<double>(region.mask.size());
}

Morphology morphology(const MeltPoolRegion& region, double pitch_um) {
    if (!(pitch_um > 0.0))
        throw ArgumentError("pixel pitch must be positive");
    return {(region.bbox.x_max - region.bbox.x_min + 1) * pitch_um,
            (region.bbox.y_max - region.bbox.y_min + 1) * pitch_um,
            static_cast<double>(region.mask.size()) * pitch_um * pitch_um};
}

} // namespace mpyro
