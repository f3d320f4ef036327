#pragma once

#include "caa/model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace caa {

inline constexpr std::uint32_t kModelFormatVersion = 1;

// CAAM container, little-endian:
//   "CAAM" | version u32 | arch tag u8 | layer count u32 | layer sizes u32... |
//   height u32 | width u32 | channels u32 | num_classes u32 | training eps f32 |
//   weights f32... (declaration order)
[[nodiscard]] auto encode_model(Classifier const& model) -> std::vector<std::uint8_t>;
[[nodiscard]] auto decode_model(std::span<const std::uint8_t> bytes) -> Classifier;

void save_model(Classifier const& model, std::filesystem::path const& path);
[[nodiscard]] auto load_model(std::filesystem::path const& path) -> Classifier;

// Whole-file helpers shared by the binary formats.
[[nodiscard]] auto read_file_bytes(std::filesystem::path const& path) -> std::vector<std::uint8_t>;
// Writes through a temporary sibling and renames, so a failed write never
// leaves a partial file behind.
void write_file_atomic(std::filesystem::path const& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(std::filesystem::path const& path, std::string const& text);

} // namespace caa
