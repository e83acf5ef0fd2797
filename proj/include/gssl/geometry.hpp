// Copyright (c) 2026 The guided-ssl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <cstddef>
#include <ostream>

namespace gssl {

/// Inclusive pixel box; x is the column axis, y the row axis.
struct BoundingBox {
  std::size_t x_min = 0;
  std::size_t y_min = 0;
  std::size_t x_max = 0;
  std::size_t y_max = 0;

  std::size_t width() const noexcept { return x_max - x_min + 1; }
  std::size_t height() const noexcept { return y_max - y_min + 1; }
  bool contains(std::size_t row, std::size_t col) const noexcept {
    return row >= y_min && row <= y_max && col >= x_min && col <= x_max;
  }
  bool contains(const BoundingBox& o) const noexcept {
    return o.x_min >= x_min && o.x_max <= x_max && o.y_min >= y_min && o.y_max <= y_max;
  }
  bool valid_for(std::size_t height, std::size_t width) const noexcept {
    return x_min <= x_max && y_min <= y_max && x_max < width && y_max < height;
  }
  static BoundingBox full(std::size_t height, std::size_t width) { return {0, 0, width - 1, height - 1}; }

  bool operator==(const BoundingBox&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const BoundingBox& b) {
  return os << "(" << b.x_min << "," << b.y_min << "," << b.x_max << "," << b.y_max << ")";
}

}  // namespace gssl
