#pragma once

#include "caa/model.hpp"
#include "caa/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace caa {

// Labeled images in [0,1]^D (HWC). Immutable after construction.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::string name, InputDims dims, std::uint32_t num_classes, std::vector<Tensor> images, std::vector<int> labels);

    [[nodiscard]] auto name() const noexcept -> std::string const& { return name_; }
    [[nodiscard]] auto dims() const noexcept -> InputDims { return dims_; }
    [[nodiscard]] auto num_classes() const noexcept -> std::uint32_t { return num_classes_; }
    [[nodiscard]] auto size() const noexcept -> std::size_t { return images_.size(); }
    [[nodiscard]] auto empty() const noexcept -> bool { return images_.empty(); }
    [[nodiscard]] auto image(std::size_t i) const -> Tensor const& { return images_.at(i); }
    [[nodiscard]] auto label(std::size_t i) const -> int { return labels_.at(i); }
    [[nodiscard]] auto images() const noexcept -> std::vector<Tensor> const& { return images_; }
    [[nodiscard]] auto labels() const noexcept -> std::vector<int> const& { return labels_; }

    friend auto operator==(Dataset const&, Dataset const&) -> bool = default;

private:
    std::string name_;
    InputDims dims_;
    std::uint32_t num_classes_ = 0;
    std::vector<Tensor> images_;
    std::vector<int> labels_;
};

struct Split {
    std::vector<std::size_t> search_indices;
    std::vector<std::size_t> eval_indices;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Big-endian IDX (MNIST container). Pixels are u8, scaled by 1/255 on load.
// num_classes == 0 infers max(label) + 1.
[[nodiscard]] auto decode_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes,
    std::string name = "idx", std::uint32_t num_classes = 0) -> Dataset;
[[nodiscard]] auto load_idx(std::filesystem::path const& image_path, std::filesystem::path const& label_path,
    std::uint32_t num_classes = 0) -> Dataset;

// Single-channel datasets only; pixels are rounded to the nearest 1/255.
[[nodiscard]] auto encode_idx_images(Dataset const& d) -> std::vector<std::uint8_t>;
[[nodiscard]] auto encode_idx_labels(Dataset const& d) -> std::vector<std::uint8_t>;
void write_idx(Dataset const& d, std::filesystem::path const& image_path, std::filesystem::path const& label_path);

// Loads <dir>/images.idx + <dir>/labels.idx, or the MNIST file names
// (train-images-idx3-ubyte / train-labels-idx1-ubyte) when present.
[[nodiscard]] auto load_idx_dir(std::filesystem::path const& dir, std::uint32_t num_classes = 0) -> Dataset;

// Gaussian blobs around the vertices of a regular simplex with edge length
// `separation` (unit isotropic noise), squashed into [0,1] by a logistic map
// and quantized to 1/255. Images have dims (1, dims, 1).
[[nodiscard]] auto synth_gaussians(std::uint32_t num_classes, std::size_t per_class, std::size_t dims, double separation,
    std::uint64_t seed) -> Dataset;

// Seven-segment style digit glyphs (10 classes) on a side x side grayscale
// canvas with random placement, slant, stroke strength and background noise.
// The desk-scale stand-in for MNIST.
[[nodiscard]] auto synth_digits(std::size_t per_class, std::uint32_t side, std::uint64_t seed) -> Dataset;

// Disjoint uniform draws of search_size and eval_size indices from [0, n).
[[nodiscard]] auto make_split(std::size_t dataset_size, std::size_t search_size, std::size_t eval_size, std::uint64_t seed) -> Split;
[[nodiscard]] auto make_split(Dataset const& d, std::size_t search_size, std::size_t eval_size, std::uint64_t seed) -> Split;

[[nodiscard]] auto subset(Dataset const& d, std::span<const std::size_t> indices) -> Dataset;

// Fraction of the listed examples the model classifies correctly (all
// examples when indices is empty).
[[nodiscard]] auto clean_accuracy(Classifier const& model, Dataset const& d, std::span<const std::size_t> indices = {}) -> double;

} // namespace caa
