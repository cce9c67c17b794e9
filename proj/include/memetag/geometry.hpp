// Copyright 2026 The memetag Authors
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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace memetag {

class InvalidBoxError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Axis-aligned pixel-space box. Valid boxes are finite, non-negative and
/// have strictly positive area (x1 < x2, y1 < y2).
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  bool is_valid() const;
  /// Throws InvalidBoxError describing the violated constraint.
  void validate() const;
  std::string to_string() const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Area of the geometric intersection of two boxes. Zero when disjoint or
/// when the boxes only touch along an edge.
double overlap_area(const BoundingBox& a, const BoundingBox& b);

/// Index of the person box with the largest raw overlap area with `face`.
/// Ties resolve to the lowest index. Empty when `persons` is empty or no
/// person box overlaps the face at all.
std::optional<std::size_t> map_face_to_person(const BoundingBox& face,
                                              std::span<const BoundingBox> persons);

}  // namespace memetag
