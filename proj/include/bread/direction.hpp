#pragma once

namespace bread {

enum class Direction { forward, reverse };

inline const char* direction_name(Direction d) {
  return d == Direction::forward ? "forward" : "reverse";
}

}  // namespace bread
