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

#include "kwspot/arena.hpp"

#include <algorithm>
#include <numeric>

#include "kwspot/error.hpp"

namespace kwspot {
namespace {

bool lifetimes_overlap(const BufferRequest& a, const BufferRequest& b) {
  return a.first_use <= b.last_use && b.first_use <= a.last_use;
}

bool ranges_overlap(std::size_t a_off, std::size_t a_size, std::size_t b_off, std::size_t b_size) {
  return a_off < b_off + b_size && b_off < a_off + a_size;
}

}  // namespace

bool ArenaPlan::valid() const {
  if (offsets.size() != buffers.size()) return false;
  for (std::size_t i = 0; i < buffers.size(); ++i) {
    if (offsets[i] + buffers[i].size > total_bytes) return false;
    for (std::size_t j = i + 1; j < buffers.size(); ++j) {
      if (buffers[i].size == 0 || buffers[j].size == 0) continue;
      if (lifetimes_overlap(buffers[i], buffers[j]) &&
          ranges_overlap(offsets[i], buffers[i].size, offsets[j], buffers[j].size)) {
        return false;
      }
    }
  }
  return true;
}

ArenaPlan plan_buffers(std::span<const BufferRequest> requests, std::size_t budget_bytes) {
  for (const auto& r : requests) {
    if (r.last_use < r.first_use) {
      throw Error(ErrorCode::kInvalidArgument, "buffer '" + r.name + "' ends before it starts");
    }
  }
  ArenaPlan plan;
  plan.buffers.assign(requests.begin(), requests.end());
  plan.offsets.assign(requests.size(), 0);

  std::vector<std::size_t> order(requests.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return requests[a].size > requests[b].size;
  });

  std::vector<std::size_t> placed;
  std::vector<std::pair<std::size_t, std::size_t>> busy;  // (offset, end)
  for (std::size_t idx : order) {
    const auto& req = requests[idx];
    busy.clear();
    for (std::size_t p : placed) {
      if (lifetimes_overlap(req, requests[p]) && requests[p].size > 0) {
        busy.emplace_back(plan.offsets[p], plan.offsets[p] + requests[p].size);
      }
    }
    std::sort(busy.begin(), busy.end());
    std::size_t candidate = 0;
    for (const auto& [start, end] : busy) {
      if (candidate + req.size <= start) break;
      candidate = std::max(candidate, end);
    }
    plan.offsets[idx] = candidate;
    plan.total_bytes = std::max(plan.total_bytes, candidate + req.size);
    placed.push_back(idx);
  }

  if (plan.total_bytes > budget_bytes) {
    throw Error(ErrorCode::kBudgetExceeded,
                "arena needs " + std::to_string(plan.total_bytes) + " bytes; budget is " +
                    std::to_string(budget_bytes) + " bytes");
  }
  return plan;
}

}  // namespace kwspot
