#pragma once

// Melt-pool extraction from one channel's sub-image.

#include "mpyro/image.hpp"

#include <optional>
#include <vector>

namespace mpyro {

struct SegmentationParams {
    double k_sigma = 3.0;          // threshold = mean + k_sigma * sd of the sub-image
    double absolute_floor = 1600.0; // counts (16-bit); max below this means no melt pool

    void validate() const;
};

struct BoundingBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;
};

struct MeltPoolRegion {
    std::vector<Pixel> mask; // row-major order
    Pixel peak;
    double mean_intensity = 0.0;
    double max_intensity = 0.0;
    BoundingBox bbox;

    Mask to_mask(int width, int height) const;
    bool contains(Pixel p) const;
};

struct Morphology {
    double width_um = 0.0;  // along x
    double length_um = 0.0; // along y
    double area_um2 = 0.0;
};

/// Adaptive threshold, then the 8-connected component that holds the global
/// maximum. Absent when the maximum is below the absolute floor.
std::optional<MeltPoolRegion> segment(const SubImage& img, const SegmentationParams& params = {});

/// Scans outward from the peak along +x, -x, +y, -y until the intensity drops
/// to the floor or has risen over two consecutive pixels (the preceding local
/// minimum bounds the scan). The region is every pixel inside the resulting
/// box brighter than the floor.
MeltPoolRegion grow_boundary(const SubImage& img, Pixel peak, double floor);

/// Arithmetic mean of img over the region's mask.
double mean_intensity(const MeltPoolRegion& region, const SubImage& img);

Morphology morphology(const MeltPoolRegion& region, double pitch_um);

} // namespace mpyro
