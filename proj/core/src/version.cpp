#include "caa/version.hpp"

namespace caa {

auto version() noexcept -> std::string_view
{
    return CAA_VERSION_STRING;
}

} // namespace caa
