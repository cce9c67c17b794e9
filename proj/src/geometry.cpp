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

#include "memetag/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace memetag {

bool BoundingBox::is_valid() const {
  for (double v : {x1, y1, x2, y2}) {
    if (!std::isfinite(v) || v < 0.0) return false;
  }
  return x1 < x2 && y1 < y2;
}

void BoundingBox::validate() const {
  for (double v : {x1, y1, x2, y2}) {
    if (!std::isfinite(v)) throw InvalidBoxError("box " + to_string() + " has a non-finite coordinate");
    if (v < 0.0) throw InvalidBoxError("box " + to_string() + " has a negative coordinate");
  }
  if (!(x1 < x2) || !(y1 < y2)) {
    throw InvalidBoxError("box " + to_string() + " has non-positive area");
  }
}

std::string BoundingBox::to_string() const {
  std::ostringstream os;
  os << "(" << x1 << "," << y1 << "," << x2 << "," << y2 << ")";
  return os.str();
}

double overlap_area(const BoundingBox& a, const BoundingBox& b) {
  a.validate();
  b.validate();
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

std::optional<std::size_t> map_face_to_person(const BoundingBox& face,
                                              std::span<const BoundingBox> persons) {
  face.validate();
  std::optional<std::size_t> best;
  double best_area = 0.0;
  for (std::size_t i = 0; i < persons.size(); ++i) {
    const double area = overlap_area(face, persons[i]);
    // strict > keeps the lowest index on ties
    if (area > best_area) {
      best_area = area;
      best = i;
    }
  }
  return best;
}

}  // namespace memetag
