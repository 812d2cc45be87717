// Copyright 2026 The progstate Authors.
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

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace progstate {

// Four-class progression label. Higher latent severity means worse disease,
// so BETTER marks a severity drop from the first to the second visit.
enum class Progression : std::uint8_t { kBetter = 0, kWorse = 1, kStable = 2, kOther = 3 };

inline constexpr int kNumClasses = 4;
inline constexpr std::array<Progression, kNumClasses> kAllProgressions = {
    Progression::kBetter, Progression::kWorse, Progression::kStable, Progression::kOther};

inline constexpr int index_of(Progression p) { return static_cast<int>(p); }

std::string_view to_string(Progression p);
std::optional<Progression> parse_progression(std::string_view s);

// BETTER <-> WORSE, STABLE and OTHER fixed.
inline constexpr Progression reversed(Progression p) {
  switch (p) {
    case Progression::kBetter: return Progression::kWorse;
    case Progression::kWorse: return Progression::kBetter;
    default: return p;
  }
}

}  // namespace progstate
