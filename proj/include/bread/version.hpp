#pragma once

namespace bread {

inline constexpr const char* version_string = "0.1.0";

}  // namespace bread
