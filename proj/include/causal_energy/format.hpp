#pragma once

#include <charconv>
#include <string>

namespace ce {

/// Shortest round-trip decimal form; locale-independent and platform-stable.
inline std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

}  // namespace ce
