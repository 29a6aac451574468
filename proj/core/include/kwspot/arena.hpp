// Copyright 2026 The kwspot Authors. All Rights Reserved.
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
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace kwspot {

/// A tensor that must live in the arena during steps [first_use, last_use]
/// (inclusive).
struct BufferRequest {
  std::size_t size = 0;
  int first_use = 0;
  int last_use = 0;
  std::string name;
};

struct ArenaPlan {
  std::size_t total_bytes = 0;
  std::vector<BufferRequest> buffers;
  std::vector<std::size_t> offsets;

  /// True when no two buffers with overlapping lifetimes share an address.
  bool valid() const;
};

inline constexpr std::size_t kUnlimitedBudget = std::numeric_limits<std::size_t>::max();

/// Greedy by size (largest first): each buffer takes the lowest offset that
/// does not collide with an already placed buffer alive at the same time.
/// Throws kBudgetExceeded, reporting the planned size, if it exceeds the budget.
ArenaPlan plan_buffers(std::span<const BufferRequest> requests,
                       std::size_t budget_bytes = kUnlimitedBudget);

}  // namespace kwspot
