#include "mpyro/registration.hpp"

#include "fft.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mpyro {

using detail::Complex;

// --- SimilarityTransform ---------------------------------------------------

Vec2 SimilarityTransform::apply(Vec2 q) const {
    const double c = std::cos(rotation);
    const double s = std::sin(rotation);
    return {scale * (c * q.x - s * q.y) + dx, scale * (s * q.x + c * q.y) + dy};
}

SimilarityTransform SimilarityTransform::inverse() const {
    SimilarityTransform inv;
    inv.scale = 1.0 / scale;
    inv.rotation = -rotation;
    const Vec2 t = inv.apply({-dx, -dy});
    inv.dx = t.x;
    inv.dy = t.y;
    return inv;
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& other) const {
    SimilarityTransform out;
    out.scale = scale * other.scale;
    out.rotation = rotation + other.rotation;
    const Vec2 t = apply({other.dx, other.dy});
    out.dx = t.x;
    out.dy = t.y;
    return out;
}

void RegistrationParams::validate() const {
    if (upscale_factor < 1)
        throw ConfigError("registration upscale factor must be >= 1");
    if (!(ssim_gate >= -1.0 && ssim_gate <= 1.0))
        throw ConfigError("SSIM gate must lie in [-1, 1]");
    if (refine_iterations < 0)
        throw ConfigError("refine_iterations must be >= 0");
    if (!(refine_smoothing >= 0.0))
        throw ConfigError("refine_smoothing must be >= 0");
    if (ssim.window < 1 || ssim.window % 2 == 0 || !(ssim.sigma > 0.0))
        throw ConfigError("SSIM window must be odd and positive with sigma > 0");
    segmentation.validate();
}

// --- Resampling ------------------------------------------------------------

SubImage upscale_image(const SubImage& img, int factor) {
    if (factor < 1)
        throw ArgumentError("upscale factor must be >= 1");
    if (factor == 1)
        return img;
    const int w = img.width();
    const int h = img.height();
    SubImage out{img.channel, Image(w * factor, h * factor), Pixel{img.origin.x * factor, img.origin.y * factor}};
    const double half = (factor - 1) / 2.0;
    for (int v = 0; v < out.height(); ++v) {
        const double y = std::clamp((v - half) / factor, 0.0, h - 1.0);
        for (int u = 0; u < out.width(); ++u) {
            const double x = std::clamp((u - half) / factor, 0.0, w - 1.0);
            double value = 0.0;
            sample_bilinear(img.pixels, x, y, value);
            out.pixels(u, v) = static_cast<float>(value);
        }
    }
    return out;
}

SubImage downscale_image(const SubImage& img, int factor) {
    if (factor < 1)
        throw ArgumentError("downscale factor must be >= 1");
    if (img.width() % factor != 0 || img.height() % factor != 0)
        throw ArgumentError("image dimensions are not divisible by the downscale factor");
    if (factor == 1)
        return img;
    SubImage out{img.channel, Image(img.width() / factor, img.height() / factor),
                 Pixel{img.origin.x / factor, img.origin.y / factor}};
    const double inv_area = 1.0 / (factor * factor);
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            double sum = 0.0;
            for (int j = 0; j < factor; ++j)
                for (int i = 0; i < factor; ++i)
                    sum += img.pixels(x * factor + i, y * factor + j);
            out.pixels(x, y) = static_cast<float>(sum * inv_area);
        }
    }
    return out;
}

namespace {

Vec2 centre_of(int w, int h) {
    return {(w - 1) / 2.0, (h - 1) / 2.0};
}

} // namespace

SubImage apply_transform(const SubImage& img, const SimilarityTransform& t, int out_width, int out_height) {
    if (!(t.scale > 0.0))
        throw ArgumentError("transform scale must be positive");
    SubImage out{img.channel, Image(out_width, out_height, 0.0f), img.origin};
    const SimilarityTransform inv = t.inverse();
    const Vec2 c_in = centre_of(img.width(), img.height());
    const Vec2 c_out = centre_of(out_width, out_height);
    for (int y = 0; y < out_height; ++y) {
        for (int x = 0; x < out_width; ++x) {
            const Vec2 src = inv.apply({x - c_out.x, y - c_out.y});
            double value = 0.0;
            if (sample_bilinear(img.pixels, src.x + c_in.x, src.y + c_in.y, value))
                out.pixels(x, y) = static_cast<float>(value);
        }
    }
    return out;
}

// --- SSIM ------------------------------------------------------------------

namespace {

std::vector<double> gaussian_kernel(int window, double sigma) {
    std::vector<double> k(static_cast<std::size_t>(window));
    const int r = window / 2;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        k[i] = std::exp(-((i - r) * (i - r)) / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double& v : k)
        v /= sum;
    return k;
}

// Separable filtering with replicated borders.
std::vector<double> blur(const std::vector<double>& src, int w, int h, const std::vector<double>& k) {
    const int r = static_cast<int>(k.size()) / 2;
    std::vector<double> tmp(src.size());
    std::vector<double> out(src.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += k[i + r] * src[static_cast<std::size_t>(y) * w + std::clamp(x + i, 0, w - 1)];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += k[i + r] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return out;
}

} // namespace

double ssim(const SubImage& a, const SubImage& b, const SsimParams& params, const Mask* mask) {
    const int w = a.width();
    const int h = a.height();
    if (w != b.width() || h != b.height())
        throw ArgumentError("SSIM inputs must have the same dimensions");
    if (mask != nullptr && (mask->width() != w || mask->height() != h))
        throw ArgumentError("SSIM mask dimensions differ from the images");
    if (w == 0 || h == 0)
        throw ArgumentError("SSIM of empty images");

    const std::size_t n = a.pixels.size();
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = a.pixels.values()[i];
        y[i] = b.pixels.values()[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto k = gaussian_kernel(params.window, params.sigma);
    const auto mu_x = blur(x, w, h, k);
    const auto mu_y = blur(y, w, h, k);
    const auto e_xx = blur(xx, w, h, k);
    const auto e_yy = blur(yy, w, h, k);
    const auto e_xy = blur(xy, w, h, k);

    // With unit exponents and C3 = C2/2 the luminance, contrast and structure
    // product collapses to the two-factor form below.
    const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
    const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask != nullptr && mask->values()[i] == 0)
            continue;
        const double var_x = e_xx[i] - mu_x[i] * mu_x[i];
        const double var_y = e_yy[i] - mu_y[i] * mu_y[i];
        const double cov = e_xy[i] - mu_x[i] * mu_y[i];
        const double num = (2.0 * mu_x[i] * mu_y[i] + c1) * (2.0 * cov + c2);
        const double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) * (var_x + var_y + c2);
        sum += num / den;
        ++count;
    }
    if (count == 0)
        throw ArgumentError("SSIM mask is empty");
    return sum / static_cast<double>(count);
}

// --- Transform estimation --------------------------------------------------

namespace {

constexpr double kPi = std::numbers::pi;

int next_pow2(int v) {
    int p = 1;
    while (p < v)
        p <<= 1;
    return p;
}

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
};

Moments moments(const Image& img) {
    double s = 0.0;
    double s2 = 0.0;
    for (float v : img.values()) {
        s += v;
        s2 += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(img.size());
    Moments m;
    m.mean = s / n;
    m.sd = std::sqrt(std::max(0.0, s2 / n - m.mean * m.mean));
    return m;
}

// Mean-removed image embedded at the centre of an n x n zero canvas,
// optionally Hann-windowed.
std::vector<Complex> embed(const Image& img, int n, bool window) {
    const int w = img.width();
    const int h = img.height();
    const double mean = moments(img).mean;
    std::vector<Complex> out(static_cast<std::size_t>(n) * n);
    const int ox = (n - w) / 2;
    const int oy = (n - h) / 2;
    for (int y = 0; y < h; ++y) {
        const double wy = window && h > 1 ? 0.5 - 0.5 * std::cos(2.0 * kPi * y / (h - 1)) : 1.0;
        for (int x = 0; x < w; ++x) {
            const double wx = window && w > 1 ? 0.5 - 0.5 * std::cos(2.0 * kPi * x / (w - 1)) : 1.0;
            out[static_cast<std::size_t>(y + oy) * n + (x + ox)] = (img(x, y) - mean) * wx * wy;
        }
    }
    return out;
}

// fftshift-ed magnitude spectrum: zero frequency at (n/2, n/2).
Image magnitude_spectrum(const Image& img, int n) {
    auto buf = embed(img, n, true);
    detail::fft2d(buf, n, n, false);
    Image mag(n, n);
    for (int ky = 0; ky < n; ++ky)
        for (int kx = 0; kx < n; ++kx)
            mag((kx + n / 2) % n, (ky + n / 2) % n) =
                static_cast<float>(std::abs(buf[static_cast<std::size_t>(ky) * n + kx]));
    return mag;
}

struct LogPolarGrid {
    int n_rho = 64;
    int n_theta = 256;
    double r_min = 1.0;
    double r_max = 32.0;
    double log_step() const { return std::log(r_max / r_min) / n_rho; }
};

Image log_polar(const Image& mag, const LogPolarGrid& g) {
    const double c = mag.width() / 2;
    Image out(g.n_rho, g.n_theta);
    for (int t = 0; t < g.n_theta; ++t) {
        const double phi = kPi * t / g.n_theta;
        const double cp = std::cos(phi);
        const double sp = std::sin(phi);
        for (int r = 0; r < g.n_rho; ++r) {
            const double rho = g.r_min * std::exp(r * g.log_step());
            double v = 0.0;
            sample_bilinear(mag, c + rho * cp, c + rho * sp, v);
            out(r, t) = static_cast<float>(v);
        }
    }
    return out;
}

struct Peak {
    double x = 0.0; // signed shift, sub-pixel
    double y = 0.0;
    double height = 0.0;
};

// Phase correlation of two equally sized complex spectra. The returned shift
// d satisfies moving(p) ~ reference(p - d).
Peak correlate_spectra(const std::vector<Complex>& fm, const std::vector<Complex>& fr, int w, int h) {
    std::vector<Complex> cross(fm.size());
    double max_mag = 0.0;
    for (std::size_t i = 0; i < fm.size(); ++i)
        max_mag = std::max(max_mag, std::abs(fm[i]) * std::abs(fr[i]));
    // Regularized whitening keeps noise-only frequencies from dominating.
    const double eps = 1e-3 * max_mag + 1e-300;
    double weight = 0.0;
    for (std::size_t i = 0; i < fm.size(); ++i) {
        const Complex c = fm[i] * std::conj(fr[i]);
        cross[i] = c / (std::abs(c) + eps);
        weight += std::abs(cross[i]);
    }
    detail::fft2d(cross, w, h, true);

    std::size_t best = 0;
    for (std::size_t i = 1; i < cross.size(); ++i)
        if (cross[i].real() > cross[best].real())
            best = i;
    const int bx = static_cast<int>(best % w);
    const int by = static_cast<int>(best / w);
    auto at = [&](int x, int y) {
        return cross[static_cast<std::size_t>((y + h) % h) * w + (x + w) % w].real();
    };
    auto refine = [](double lo, double mid, double hi) {
        const double denom = lo - 2.0 * mid + hi;
        if (std::abs(denom) < 1e-300)
            return 0.0;
        return std::clamp(0.5 * (lo - hi) / denom, -0.5, 0.5);
    };
    Peak p;
    // 1 for a pure shift, whatever the spectral content.
    p.height = weight > 0.0 ? at(bx, by) / weight : 0.0;
    p.x = bx + refine(at(bx - 1, by), at(bx, by), at(bx + 1, by));
    p.y = by + refine(at(bx, by - 1), at(bx, by), at(bx, by + 1));
    if (p.x > w / 2.0)
        p.x -= w;
    if (p.y > h / 2.0)
        p.y -= h;
    return p;
}

std::vector<Complex> spectrum_of(const Image& img, int w, int h) {
    std::vector<Complex> buf(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            buf[static_cast<std::size_t>(y) * w + x] = img(x, y);
    detail::fft2d(buf, w, h, false);
    return buf;
}

// Central-difference gradients.
void gradients(const Image& img, Image& gx, Image& gy) {
    const int w = img.width();
    const int h = img.height();
    gx = Image(w, h);
    gy = Image(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
            const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
            gx(x, y) = static_cast<float>((img(xr, y) - img(xl, y)) / std::max(1, xr - xl));
            gy(x, y) = static_cast<float>((img(x, yd) - img(x, yu)) / std::max(1, yd - yu));
        }
}

Image smoothed(const Image& img, double sigma) {
    const int w = img.width();
    const int h = img.height();
    std::vector<double> v(img.values().begin(), img.values().end());
    const auto k = gaussian_kernel(2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1, sigma);
    const auto b = blur(v, w, h, k);
    Image out(w, h);
    for (std::size_t i = 0; i < b.size(); ++i)
        out.values()[i] = static_cast<float>(b[i]);
    return out;
}

struct RefineResult {
    SimilarityTransform transform;
    double correlation = 0.0;
};

// Gauss-Newton (Levenberg damped) fit of moving(W(q)) ~ gain * reference(q) + offset.
RefineResult refine(const Image& moving, const Image& reference, SimilarityTransform init, int iterations) {
    const int w = reference.width();
    const int h = reference.height();
    const Vec2 c = centre_of(w, h);
    Image gx, gy;
    gradients(moving, gx, gy);

    // Only pixels with structure in either image inform the fit.
    const Moments mr = moments(reference);
    const Moments mm = moments(moving);
    std::vector<Pixel> support;
    {
        const double tr = mr.mean + 0.05 * mr.sd;
        const double tm = mm.mean + 0.05 * mm.sd;
        Mask keep(w, h, 0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (reference(x, y) > tr || moving(x, y) > tm)
                    for (int dy = -3; dy <= 3; ++dy)
                        for (int dx = -3; dx <= 3; ++dx)
                            if (keep.contains(x + dx, y + dy))
                                keep(x + dx, y + dy) = 1;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (keep(x, y))
                    support.push_back({x, y});
    }

    using Vec6 = Eigen::Matrix<double, 6, 1>;
    using Mat6 = Eigen::Matrix<double, 6, 6>;
    Vec6 p;
    p << init.scale * std::cos(init.rotation), init.scale * std::sin(init.rotation), init.dx, init.dy,
        (mr.sd > 0.0 ? mm.sd / mr.sd : 1.0), 0.0;
    p(5) = mm.mean - p(4) * mr.mean;

    auto evaluate = [&](const Vec6& q, Mat6* hessian, Vec6* gradient) {
        double cost = 0.0;
        std::size_t used = 0;
        if (hessian) {
            hessian->setZero();
            gradient->setZero();
        }
        for (const auto px : support) {
            const double qx = px.x - c.x;
            const double qy = px.y - c.y;
            const double wx = q(0) * qx - q(1) * qy + q(2) + c.x;
            const double wy = q(1) * qx + q(0) * qy + q(3) + c.y;
            double m = 0.0;
            if (!sample_bilinear(moving, wx, wy, m))
                continue;
            const double r = reference(px.x, px.y);
            const double e = m - q(4) * r - q(5);
            cost += e * e;
            ++used;
            if (hessian) {
                double mx = 0.0, my = 0.0;
                sample_bilinear(gx, wx, wy, mx);
                sample_bilinear(gy, wx, wy, my);
                Vec6 j;
                j << mx * qx + my * qy, -mx * qy + my * qx, mx, my, -r, -1.0;
                hessian->selfadjointView<Eigen::Lower>().rankUpdate(j);
                *gradient += j * e;
            }
        }
        if (hessian)
            *hessian = hessian->selfadjointView<Eigen::Lower>();
        return used > 0 ? cost / static_cast<double>(used) : INFINITY;
    };

    Mat6 hess;
    Vec6 grad;
    double cost = evaluate(p, &hess, &grad);
    double lambda = 1e-4;
    for (int it = 0; it < iterations && std::isfinite(cost); ++it) {
        bool improved = false;
        for (int attempt = 0; attempt < 8; ++attempt) {
            Mat6 damped = hess;
            damped.diagonal() *= (1.0 + lambda);
            const Vec6 step = damped.ldlt().solve(-grad);
            if (!step.allFinite())
                break;
            const Vec6 trial = p + step;
            Mat6 h2;
            Vec6 g2;
            const double c2 = evaluate(trial, &h2, &g2);
            if (c2 <= cost) {
                p = trial;
                const bool converged = step.head<2>().cwiseAbs().maxCoeff() < 1e-7
                                       && step.segment<2>(2).cwiseAbs().maxCoeff() < 1e-5;
                cost = c2;
                hess = h2;
                grad = g2;
                lambda = std::max(lambda * 0.1, 1e-9);
                improved = !converged;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved)
            break;
    }

    RefineResult out;
    out.transform.scale = std::hypot(p(0), p(1));
    out.transform.rotation = std::atan2(p(1), p(0));
    out.transform.dx = p(2);
    out.transform.dy = p(3);

    // Normalized cross-correlation of the aligned support.
    double sm = 0, sr = 0, smm = 0, srr = 0, smr = 0;
    std::size_t n = 0;
    for (const auto px : support) {
        const double qx = px.x - c.x;
        const double qy = px.y - c.y;
        const double wx = p(0) * qx - p(1) * qy + p(2) + c.x;
        const double wy = p(1) * qx + p(0) * qy + p(3) + c.y;
        double m = 0.0;
        if (!sample_bilinear(moving, wx, wy, m))
            continue;
        const double r = reference(px.x, px.y);
        sm += m;
        sr += r;
        smm += m * m;
        srr += r * r;
        smr += m * r;
        ++n;
    }
    if (n > 1) {
        const double dn = static_cast<double>(n);
        const double cov = smr / dn - (sm / dn) * (sr / dn);
        const double vm = smm / dn - (sm / dn) * (sm / dn);
        const double vr = srr / dn - (sr / dn) * (sr / dn);
        out.correlation = (vm > 0 && vr > 0) ? cov / std::sqrt(vm * vr) : 0.0;
    }
    return out;
}

} // namespace

SimilarityTransform estimate_transform(const SubImage& moving, const SubImage& reference,
                                       const RegistrationParams& params) {
    const int w = reference.width();
    const int h = reference.height();
    if (moving.width() != w || moving.height() != h)
        throw ArgumentError("registration inputs must have the same dimensions");
    if (w < 4 || h < 4)
        throw ArgumentError("registration inputs are too small");

    const Moments mm = moments(moving.pixels);
    const Moments mr = moments(reference.pixels);
    if (!(mm.sd > 1e-6 * std::max(1.0, std::abs(mm.mean))) || !(mr.sd > 1e-6 * std::max(1.0, std::abs(mr.mean))))
        throw RegistrationError("no reliable transform: image has no structure");

    // Rotation and scale from the log-polar magnitude spectra.
    const int n = std::max(64, next_pow2(std::max(w, h)));
    LogPolarGrid grid;
    grid.r_min = 1.0;
    grid.r_max = n / 4.0;
    const Image lp_m = log_polar(magnitude_spectrum(moving.pixels, n), grid);
    const Image lp_r = log_polar(magnitude_spectrum(reference.pixels, n), grid);
    const Peak rs = correlate_spectra(spectrum_of(lp_m, grid.n_rho, grid.n_theta),
                                      spectrum_of(lp_r, grid.n_rho, grid.n_theta), grid.n_rho, grid.n_theta);
    SimilarityTransform coarse;
    coarse.scale = std::exp(-rs.x * grid.log_step());
    coarse.rotation = rs.y * kPi / grid.n_theta;

    // Translation after undoing rotation and scale.
    const SimilarityTransform rot_scale{coarse.scale, coarse.rotation, 0.0, 0.0};
    const SubImage derotated = apply_transform(moving, rot_scale.inverse(), w, h);
    const int pw = next_pow2(2 * w);
    const int ph = next_pow2(2 * h);
    auto pad = [&](const Image& img) {
        auto buf = embed(img, std::max(pw, ph), false);
        detail::fft2d(buf, std::max(pw, ph), std::max(pw, ph), false);
        return buf;
    };
    const int np = std::max(pw, ph);
    const Peak tr = correlate_spectra(pad(derotated.pixels), pad(reference.pixels), np, np);
    if (!(tr.height >= params.min_peak))
        throw RegistrationError("no reliable transform: correlation peak " + std::to_string(tr.height)
                                + " below confidence floor");
    const Vec2 d = rot_scale.apply({tr.x, tr.y});
    coarse.dx = d.x;
    coarse.dy = d.y;

    const RefineResult fine = params.refine_smoothing > 0.0
                                  ? refine(smoothed(moving.pixels, params.refine_smoothing),
                                           smoothed(reference.pixels, params.refine_smoothing), coarse,
                                           params.refine_iterations)
                                  : refine(moving.pixels, reference.pixels, coarse, params.refine_iterations);
    if (!(fine.correlation >= params.min_correlation) || !(fine.transform.scale > 0.0))
        throw RegistrationError("no reliable transform: aligned correlation "
                                + std::to_string(fine.correlation) + " below floor");
    return fine.transform;
}

RegistrationResult register_pair(const SubImage& moving, const SubImage& reference,
                                 const RegistrationParams& params) {
    RegistrationResult result;
    result.warped = SubImage{moving.channel, Image(reference.width(), reference.height(), 0.0f), reference.origin};

    const auto seg_ref = segment(reference, params.segmentation);
    if (!seg_ref) {
        result.reason = "no melt pool in reference";
        return result;
    }
    const auto seg_mov = segment(moving, params.segmentation);
    if (!seg_mov) {
        result.reason = "no melt pool in moving image";
        return result;
    }
    if (moving.width() != reference.width() || moving.height() != reference.height()) {
        result.reason = "sub-image dimensions differ";
        return result;
    }

    const int f = params.upscale_factor;
    const SubImage mu = upscale_image(moving, f);
    const SubImage ru = upscale_image(reference, f);
    SimilarityTransform t_up;
    try {
        t_up = estimate_transform(mu, ru, params);
    } catch (const RegistrationError& e) {
        result.reason = e.what();
        return result;
    }
    result.transform = {t_up.scale, t_up.rotation, t_up.dx / f, t_up.dy / f};
    result.warped = downscale_image(apply_transform(mu, t_up.inverse(), ru.width(), ru.height()), f);
    result.warped.origin = reference.origin;
    result.reference_resampled = downscale_image(ru, f);
    result.reference_resampled.origin = reference.origin;

    // SSIM over the union of both melt-pool masks, after matching the mean
    // level of the two channels.
    Mask union_mask = seg_ref->to_mask(reference.width(), reference.height());
    if (const auto seg_warped = segment(result.warped, params.segmentation))
        for (const auto p : seg_warped->mask)
            union_mask(p.x, p.y) = 1;
    double sum_w = 0.0, sum_r = 0.0;
    for (int y = 0; y < reference.height(); ++y)
        for (int x = 0; x < reference.width(); ++x)
            if (union_mask(x, y)) {
                sum_w += result.warped.pixels(x, y);
                sum_r += reference.pixels(x, y);
            }
    SubImage matched = result.warped;
    if (sum_w > 0.0)
        for (float& v : matched.pixels.values())
            v = static_cast<float>(v * (sum_r / sum_w));
    result.ssim = ssim(matched, reference, params.ssim, &union_mask);
    result.accepted = result.ssim >= params.ssim_gate;
    if (!result.accepted)
        result.reason = "SSIM " + std::to_string(result.ssim) + " below gate";
    return result;
}

} // namespace mpyro
