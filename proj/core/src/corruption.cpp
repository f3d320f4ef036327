#include "caa/attacks.hpp"

#include "caa/error.hpp"
#include "caa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace caa {

namespace {

    struct Image {
        std::size_t h;
        std::size_t w;
        std::size_t c;
        std::vector<double> v;

        auto at(std::size_t r, std::size_t q, std::size_t ch) -> double& { return v[(r * w + q) * c + ch]; }
        [[nodiscard]] auto at(std::size_t r, std::size_t q, std::size_t ch) const -> double { return v[(r * w + q) * c + ch]; }
    };

    auto as_image(Tensor const& x) -> Image
    {
        if (x.shape.size() == 3) {
            return { x.shape[0], x.shape[1], x.shape[2], x.to_doubles() };
        }
        if (x.shape.size() == 2) {
            return { x.shape[0], x.shape[1], 1, x.to_doubles() };
        }
        return { 1, x.size(), 1, x.to_doubles() };
    }

    void blur(Image& img, double sigma)
    {
        auto const radius = static_cast<long>(std::ceil(3.0 * sigma));
        std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
        double total = 0.0;
        for (long i = -radius; i <= radius; ++i) {
            double const k = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
            kernel[static_cast<std::size_t>(i + radius)] = k;
            total += k;
        }
        for (double& k : kernel) {
            k /= total;
        }
        auto const clampi = [](long i, std::size_t n) { return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1)); };
        Image tmp = img;
        for (std::size_t r = 0; r < img.h; ++r) {
            for (std::size_t q = 0; q < img.w; ++q) {
                for (std::size_t ch = 0; ch < img.c; ++ch) {
                    double s = 0.0;
                    for (long i = -radius; i <= radius; ++i) {
                        s += kernel[static_cast<std::size_t>(i + radius)] * img.at(r, clampi(static_cast<long>(q) + i, img.w), ch);
                    }
                    tmp.at(r, q, ch) = s;
                }
            }
        }
        for (std::size_t r = 0; r < img.h; ++r) {
            for (std::size_t q = 0; q < img.w; ++q) {
                for (std::size_t ch = 0; ch < img.c; ++ch) {
                    double s = 0.0;
                    for (long i = -radius; i <= radius; ++i) {
                        s += kernel[static_cast<std::size_t>(i + radius)] * tmp.at(clampi(static_cast<long>(r) + i, img.h), q, ch);
                    }
                    img.at(r, q, ch) = s;
                }
            }
        }
    }

    void pixelate(Image& img, double factor)
    {
        auto const b = static_cast<std::size_t>(std::max(1L, std::lround(1.0 / factor)));
        for (std::size_t r0 = 0; r0 < img.h; r0 += b) {
            for (std::size_t q0 = 0; q0 < img.w; q0 += b) {
                std::size_t const r1 = std::min(r0 + b, img.h);
                std::size_t const q1 = std::min(q0 + b, img.w);
                for (std::size_t ch = 0; ch < img.c; ++ch) {
                    double s = 0.0;
                    for (std::size_t r = r0; r < r1; ++r) {
                        for (std::size_t q = q0; q < q1; ++q) {
                            s += img.at(r, q, ch);
                        }
                    }
                    double const mean = s / static_cast<double>((r1 - r0) * (q1 - q0));
                    for (std::size_t r = r0; r < r1; ++r) {
                        for (std::size_t q = q0; q < q1; ++q) {
                            img.at(r, q, ch) = mean;
                        }
                    }
                }
            }
        }
    }

} // namespace

auto corruption_attack(AttackKind kind, Tensor const& x, std::uint64_t seed, CorruptionParams const& params) -> Tensor
{
    if (!is_corruption(kind)) {
        throw CatalogError(std::string(attack_name(kind)) + " is not a corruption");
    }
    Image img = as_image(x);
    Rng rng(seed);
    switch (kind) {
    case AttackKind::gaussian_noise:
        for (double& v : img.v) {
            v += rng.normal(0.0, params.gaussian_sigma);
        }
        break;
    case AttackKind::shot_noise:
        for (double& v : img.v) {
            v = static_cast<double>(rng.poisson(std::max(v, 0.0) * params.shot_scale)) / params.shot_scale;
        }
        break;
    case AttackKind::impulse_noise:
        for (double& v : img.v) {
            if (rng.bernoulli(params.impulse_fraction)) {
                v = rng.bernoulli(0.5) ? 1.0 : 0.0;
            }
        }
        break;
    case AttackKind::brightness:
        for (double& v : img.v) {
            v += params.brightness_shift;
        }
        break;
    case AttackKind::contrast: {
        double mean = 0.0;
        for (double v : img.v) {
            mean += v;
        }
        mean /= static_cast<double>(img.v.size());
        for (double& v : img.v) {
            v = (v - mean) * params.contrast_factor + mean;
        }
        break;
    }
    case AttackKind::pixelate:
        pixelate(img, params.pixelate_factor);
        break;
    case AttackKind::gaussian_blur:
        blur(img, params.blur_sigma);
        break;
    case AttackKind::saturate:
        if (img.c == 3) {
            for (std::size_t p = 0; p < img.h * img.w; ++p) {
                double* px = &img.v[p * 3];
                double const gray = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    px[ch] = gray + params.saturate_factor * (px[ch] - gray);
                }
            }
        }
        break;
    default:
        break;
    }
    clip_unit(img.v);
    return Tensor::from_doubles(x.shape, img.v);
}

} // namespace caa
