// Copyright 2026 The ctxai Authors.
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

#ifndef CTXAI_SLICE_INTEGRATION_HPP
#define CTXAI_SLICE_INTEGRATION_HPP

#include <optional>
#include <span>
#include <vector>

#include "ctxai/image.hpp"

namespace ctxai {

struct PatientVolume {
  std::vector<GrayImage> slices;
  std::optional<int> label;  // 0 or 1 when annotated

  void validate() const;
};

// Half-open slice range [begin, end).
struct SliceRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  friend bool operator==(const SliceRange&, const SliceRange&) = default;
};

struct SectionPartition {
  std::vector<SliceRange> sections;
  std::size_t section_length = 8;
};

inline constexpr std::size_t kDefaultSectionLength = 8;
inline constexpr std::size_t kDefaultTopK = 2;
inline constexpr double kProbClamp = 1e-12;

// max(1, floor(n / l_s)) contiguous sections whose sizes differ by at most
// one; the earliest sections take the remainder.
SectionPartition partition_sections(std::size_t n, std::size_t section_length = kDefaultSectionLength);

// sigmoid(mean of the min(k, len) largest raw scores).
double section_prob(std::span<const double> scores, std::size_t k = kDefaultTopK);

// 1 - prod_i (1 - p_i).
double noisy_or(std::span<const double> probs);

struct PatientScore {
  std::vector<double> section_probs;
  double probability = 0.0;
};

PatientScore patient_prob(std::span<const double> slice_scores, const SectionPartition& partition,
                          std::size_t k = kDefaultTopK);

// Mean binary cross-entropy with probabilities clamped to [1e-12, 1 - 1e-12].
double bce_loss(std::span<const double> probs, std::span<const int> labels);

}  // namespace ctxai

#endif  // CTXAI_SLICE_INTEGRATION_HPP
