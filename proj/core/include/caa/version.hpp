#pragma once

#include <string_view>

namespace caa {

[[nodiscard]] auto version() noexcept -> std::string_view;

} // namespace caa
