#include "caa/data.hpp"

#include "caa/error.hpp"
#include "caa/model_io.hpp"
#include "caa/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace caa {

Dataset::Dataset(std::string name, InputDims dims, std::uint32_t num_classes, std::vector<Tensor> images, std::vector<int> labels)
    : name_(std::move(name))
    , dims_(dims)
    , num_classes_(num_classes)
    , images_(std::move(images))
    , labels_(std::move(labels))
{
    if (images_.size() != labels_.size()) {
        throw ValidationError("dataset has " + std::to_string(images_.size()) + " images but " + std::to_string(labels_.size()) + " labels");
    }
    for (std::size_t i = 0; i < images_.size(); ++i) {
        if (labels_[i] < 0 || static_cast<std::uint32_t>(labels_[i]) >= num_classes_) {
            throw ValidationError("label out of range at example " + std::to_string(i));
        }
        if (images_[i].size() != dims_.size()) {
            throw ValidationError("image size mismatch at example " + std::to_string(i));
        }
        if (!images_[i].in_unit_box()) {
            throw ValidationError("pixel outside [0,1] at example " + std::to_string(i));
        }
    }
}

namespace {

    auto read_be32(std::span<const std::uint8_t> b, std::size_t off) -> std::uint32_t
    {
        if (off + 4 > b.size()) {
            throw LoadError("truncated IDX header", b.size());
        }
        return (static_cast<std::uint32_t>(b[off]) << 24U) | (static_cast<std::uint32_t>(b[off + 1]) << 16U)
            | (static_cast<std::uint32_t>(b[off + 2]) << 8U) | static_cast<std::uint32_t>(b[off + 3]);
    }

    void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v)
    {
        out.push_back(static_cast<std::uint8_t>(v >> 24U));
        out.push_back(static_cast<std::uint8_t>(v >> 16U));
        out.push_back(static_cast<std::uint8_t>(v >> 8U));
        out.push_back(static_cast<std::uint8_t>(v));
    }

    auto quantize(double v) -> float
    {
        return static_cast<float>(std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0);
    }

} // namespace

auto decode_idx(std::span<const std::uint8_t> img, std::span<const std::uint8_t> lab, std::string name, std::uint32_t num_classes) -> Dataset
{
    if (read_be32(img, 0) != kIdxImageMagic) {
        throw LoadError("bad IDX image magic", 0);
    }
    auto const n = read_be32(img, 4);
    auto const rows = read_be32(img, 8);
    auto const cols = read_be32(img, 12);
    std::size_t const pixels = static_cast<std::size_t>(rows) * cols;
    std::size_t const need = 16 + static_cast<std::size_t>(n) * pixels;
    if (img.size() < need) {
        throw LoadError("truncated IDX image payload", img.size());
    }
    if (read_be32(lab, 0) != kIdxLabelMagic) {
        throw LoadError("bad IDX label magic", 0);
    }
    auto const nl = read_be32(lab, 4);
    if (nl != n) {
        throw LoadError("label count " + std::to_string(nl) + " does not match image count " + std::to_string(n), 4);
    }
    if (lab.size() < 8 + static_cast<std::size_t>(n)) {
        throw LoadError("truncated IDX label payload", lab.size());
    }
    std::vector<Tensor> images;
    std::vector<int> labels;
    images.reserve(n);
    labels.reserve(n);
    int max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<float> px(pixels);
        for (std::size_t p = 0; p < pixels; ++p) {
            px[p] = static_cast<float>(img[16 + i * pixels + p]) / 255.0F;
        }
        images.emplace_back(std::vector<std::size_t> { rows, cols, 1 }, std::move(px));
        labels.push_back(lab[8 + i]);
        max_label = std::max(max_label, labels.back());
    }
    if (num_classes == 0) {
        num_classes = static_cast<std::uint32_t>(max_label + 1);
    }
    return { std::move(name), InputDims { rows, cols, 1 }, num_classes, std::move(images), std::move(labels) };
}

auto load_idx(std::filesystem::path const& image_path, std::filesystem::path const& label_path, std::uint32_t num_classes) -> Dataset
{
    return decode_idx(read_file_bytes(image_path), read_file_bytes(label_path), image_path.parent_path().filename().string(), num_classes);
}

auto encode_idx_images(Dataset const& d) -> std::vector<std::uint8_t>
{
    if (d.dims().channels != 1) {
        throw ValidationError("IDX export supports single-channel images only");
    }
    std::vector<std::uint8_t> out;
    put_be32(out, kIdxImageMagic);
    put_be32(out, static_cast<std::uint32_t>(d.size()));
    put_be32(out, d.dims().height);
    put_be32(out, d.dims().width);
    for (auto const& im : d.images()) {
        for (float v : im.data) {
            out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0)));
        }
    }
    return out;
}

auto encode_idx_labels(Dataset const& d) -> std::vector<std::uint8_t>
{
    std::vector<std::uint8_t> out;
    put_be32(out, kIdxLabelMagic);
    put_be32(out, static_cast<std::uint32_t>(d.size()));
    for (int l : d.labels()) {
        if (l > 255) {
            throw ValidationError("IDX labels are limited to 256 classes");
        }
        out.push_back(static_cast<std::uint8_t>(l));
    }
    return out;
}

void write_idx(Dataset const& d, std::filesystem::path const& image_path, std::filesystem::path const& label_path)
{
    write_file_atomic(image_path, encode_idx_images(d));
    write_file_atomic(label_path, encode_idx_labels(d));
}

auto load_idx_dir(std::filesystem::path const& dir, std::uint32_t num_classes) -> Dataset
{
    namespace fs = std::filesystem;
    if (fs::exists(dir / "images.idx")) {
        return load_idx(dir / "images.idx", dir / "labels.idx", num_classes);
    }
    if (fs::exists(dir / "train-images-idx3-ubyte")) {
        return load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", num_classes);
    }
    throw Error("no IDX dataset found in " + dir.string());
}

auto synth_gaussians(std::uint32_t num_classes, std::size_t per_class, std::size_t dims, double separation, std::uint64_t seed) -> Dataset
{
    if (num_classes < 1 || dims < 1) {
        throw ValidationError("synth_gaussians needs positive class and dimension counts");
    }
    if (separation < 0.0) {
        throw ValidationError("separation must be non-negative");
    }
    Rng rng(seed);
    // simplex vertices e_k - centroid scaled so that pairwise distance == separation
    std::vector<std::vector<double>> means(num_classes, std::vector<double>(dims, 0.0));
    if (dims >= num_classes) {
        for (std::uint32_t k = 0; k < num_classes; ++k) {
            for (std::uint32_t j = 0; j < num_classes; ++j) {
                means[k][j] = (separation / std::sqrt(2.0)) * ((j == k ? 1.0 : 0.0) - 1.0 / num_classes);
            }
        }
    } else {
        for (auto& m : means) {
            double n = 0.0;
            for (auto& v : m) {
                v = rng.normal();
                n += v * v;
            }
            for (auto& v : m) {
                v *= separation / std::sqrt(2.0 * n);
            }
        }
    }
    std::vector<Tensor> images;
    std::vector<int> labels;
    for (std::size_t i = 0; i < per_class; ++i) {
        for (std::uint32_t k = 0; k < num_classes; ++k) {
            std::vector<float> px(dims);
            for (std::size_t j = 0; j < dims; ++j) {
                double const latent = means[k][j] + rng.normal();
                px[j] = quantize(1.0 / (1.0 + std::exp(-latent / 4.0)));
            }
            images.emplace_back(std::vector<std::size_t> { 1, dims, 1 }, std::move(px));
            labels.push_back(static_cast<int>(k));
        }
    }
    return { "gaussians", InputDims { 1, static_cast<std::uint32_t>(dims), 1 }, num_classes, std::move(images), std::move(labels) };
}

namespace {

    // segment endpoints in a unit glyph box: x right, y down
    struct Segment {
        double x0, y0, x1, y1;
    };
    constexpr std::array<Segment, 7> kSegments { {
        { 0.0, 0.0, 1.0, 0.0 }, // a top
        { 1.0, 0.0, 1.0, 0.5 }, // b upper right
        { 1.0, 0.5, 1.0, 1.0 }, // c lower right
        { 0.0, 1.0, 1.0, 1.0 }, // d bottom
        { 0.0, 0.5, 0.0, 1.0 }, // e lower left
        { 0.0, 0.0, 0.0, 0.5 }, // f upper left
        { 0.0, 0.5, 1.0, 0.5 }, // g middle
    } };
    // bit i set => segment i lit
    constexpr std::array<std::uint8_t, 10> kDigitMask { 0x3F, 0x06, 0x5B, 0x4F, 0x66, 0x6D, 0x7D, 0x07, 0x7F, 0x6F };

    auto segment_distance(double px, double py, Segment const& s) -> double
    {
        double const dx = s.x1 - s.x0;
        double const dy = s.y1 - s.y0;
        double const len2 = dx * dx + dy * dy;
        double t = ((px - s.x0) * dx + (py - s.y0) * dy) / len2;
        t = std::clamp(t, 0.0, 1.0);
        double const cx = s.x0 + t * dx - px;
        double const cy = s.y0 + t * dy - py;
        return std::sqrt(cx * cx + cy * cy);
    }

} // namespace

auto synth_digits(std::size_t per_class, std::uint32_t side, std::uint64_t seed) -> Dataset
{
    if (side < 6) {
        throw ValidationError("synth_digits needs a canvas of at least 6x6");
    }
    Rng rng(seed);
    std::vector<Tensor> images;
    std::vector<int> labels;
    double const s = side;
    for (std::size_t i = 0; i < per_class; ++i) {
        for (int digit = 0; digit < 10; ++digit) {
            double const gw = s * rng.uniform(0.38, 0.5);
            double const gh = s * rng.uniform(0.6, 0.72);
            double const ox = rng.uniform(1.0, s - gw - 1.0);
            double const oy = rng.uniform(1.0, s - gh - 1.0);
            double const slant = rng.uniform(-0.15, 0.15);
            double const thickness = rng.uniform(0.7, 1.2);
            double const strength = rng.uniform(0.75, 1.0);
            std::vector<float> px(static_cast<std::size_t>(side) * side);
            for (std::uint32_t r = 0; r < side; ++r) {
                for (std::uint32_t c = 0; c < side; ++c) {
                    double const gy = (r + 0.5 - oy) / gh;
                    double const gx = (c + 0.5 - ox - slant * (r + 0.5 - oy)) / gw;
                    double best = 1e9;
                    for (std::size_t k = 0; k < kSegments.size(); ++k) {
                        if ((kDigitMask[static_cast<std::size_t>(digit)] >> k) & 1U) {
                            // distance measured in pixels
                            auto const& sg = kSegments[k];
                            Segment scaled { sg.x0 * gw, sg.y0 * gh, sg.x1 * gw, sg.y1 * gh };
                            best = std::min(best, segment_distance(gx * gw, gy * gh, scaled));
                        }
                    }
                    double ink = std::clamp(1.0 - (best - thickness * 0.5), 0.0, 1.0) * strength;
                    ink += rng.normal(0.0, 0.05);
                    px[static_cast<std::size_t>(r) * side + c] = quantize(ink);
                }
            }
            images.emplace_back(std::vector<std::size_t> { side, side, 1 }, std::move(px));
            labels.push_back(digit);
        }
    }
    return { "digits", InputDims { side, side, 1 }, 10, std::move(images), std::move(labels) };
}

auto make_split(std::size_t n, std::size_t search_size, std::size_t eval_size, std::uint64_t seed) -> Split
{
    if (search_size + eval_size > n) {
        throw ValidationError("split of " + std::to_string(search_size) + " + " + std::to_string(eval_size)
            + " examples exceeds dataset size " + std::to_string(n));
    }
    if (search_size == 0 || eval_size == 0) {
        throw ValidationError("both split partitions must be non-empty");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t { 0 });
    Rng rng(seed);
    // partial Fisher-Yates; only the first search+eval slots are needed
    for (std::size_t i = 0; i < search_size + eval_size; ++i) {
        auto const j = i + static_cast<std::size_t>(rng.uniform_int(n - i));
        std::swap(perm[i], perm[j]);
    }
    Split s;
    s.search_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(search_size));
    s.eval_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(search_size),
        perm.begin() + static_cast<std::ptrdiff_t>(search_size + eval_size));
    std::sort(s.search_indices.begin(), s.search_indices.end());
    std::sort(s.eval_indices.begin(), s.eval_indices.end());
    return s;
}

auto make_split(Dataset const& d, std::size_t search_size, std::size_t eval_size, std::uint64_t seed) -> Split
{
    return make_split(d.size(), search_size, eval_size, seed);
}

auto subset(Dataset const& d, std::span<const std::size_t> indices) -> Dataset
{
    std::vector<Tensor> images;
    std::vector<int> labels;
    for (auto i : indices) {
        images.push_back(d.image(i));
        labels.push_back(d.label(i));
    }
    return { d.name(), d.dims(), d.num_classes(), std::move(images), std::move(labels) };
}

auto clean_accuracy(Classifier const& model, Dataset const& d, std::span<const std::size_t> indices) -> double
{
    std::size_t correct = 0;
    std::size_t total = 0;
    auto check = [&](std::size_t i) {
        ++total;
        if (model.predict(d.image(i).to_doubles()) == d.label(i)) {
            ++correct;
        }
    };
    if (indices.empty()) {
        for (std::size_t i = 0; i < d.size(); ++i) {
            check(i);
        }
    } else {
        for (auto i : indices) {
            check(i);
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

} // namespace caa
