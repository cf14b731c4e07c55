#include "mpyro/image.hpp"

#include <algorithm>
#include <cmath>

namespace mpyro {

std::string to_string(Channel c) {
    return c == Channel::wl550 ? "wl550" : "wl620";
}

bool sample_bilinear(const Image& img, double x, double y, double& out) {
    const int w = img.width();
    const int h = img.height();
    constexpr double kEdge = 1e-9;
    if (w == 0 || h == 0 || x < -kEdge || y < -kEdge || x > w - 1 + kEdge || y > h - 1 + kEdge)
        return false;
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = std::min(static_cast<int>(x), w - 1);
    const int y0 = std::min(static_cast<int>(y), h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = (1.0 - fx) * img(x0, y0) + fx * img(x1, y0);
    const double bottom = (1.0 - fx) * img(x0, y1) + fx * img(x1, y1);
    out = (1.0 - fy) * top + fy * bottom;
    return true;
}

} // namespace mpyro
