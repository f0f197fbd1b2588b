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

#include "ctxai/slice_integration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "ctxai/numerics.hpp"

namespace ctxai {

void PatientVolume::validate() const {
  if (slices.empty()) throw ValidationError("patient volume has no slices");
  for (const GrayImage& s : slices) {
    if (s.height() != slices.front().height() || s.width() != slices.front().width()) {
      throw ShapeError("patient slices must share dimensions");
    }
  }
  if (label && *label != 0 && *label != 1) throw ValidationError("patient label must be 0 or 1");
}

SectionPartition partition_sections(std::size_t n, std::size_t section_length) {
  if (n == 0) throw ValidationError("cannot partition an empty volume");
  if (section_length == 0) throw ValidationError("section length must be positive");
  const std::size_t count = std::max<std::size_t>(1, n / section_length);
  const std::size_t base = n / count;
  const std::size_t extra = n % count;
  SectionPartition part;
  part.section_length = section_length;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    part.sections.push_back({begin, begin + len});
    begin += len;
  }
  return part;
}

double section_prob(std::span<const double> scores, std::size_t k) {
  if (scores.empty()) throw ValidationError("section has no scores");
  if (k == 0) throw ValidationError("top-k requires k >= 1");
  std::vector<double> sorted(scores.begin(), scores.end());
  const std::size_t take = std::min(k, sorted.size());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(take),
                    sorted.end(), std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += sorted[i];
  return sigmoid(sum / static_cast<double>(take));
}

double noisy_or(std::span<const double> probs) {
  double miss = 1.0;
  for (double p : probs) miss *= 1.0 - p;
  return 1.0 - miss;
}

PatientScore patient_prob(std::span<const double> slice_scores, const SectionPartition& partition,
                          std::size_t k) {
  const std::size_t covered = partition.sections.empty() ? 0 : partition.sections.back().end;
  if (covered != slice_scores.size()) {
    throw ValidationError("partition covers " + std::to_string(covered) + " slices but " +
                          std::to_string(slice_scores.size()) + " scores were given");
  }
  PatientScore out;
  for (const SliceRange& s : partition.sections) {
    out.section_probs.push_back(section_prob(slice_scores.subspan(s.begin, s.size()), k));
  }
  out.probability = noisy_or(out.section_probs);
  return out;
}

double bce_loss(std::span<const double> probs, std::span<const int> labels) {
  if (probs.size() != labels.size()) throw ValidationError("probs and labels differ in length");
  if (probs.empty()) throw ValidationError("bce_loss needs at least one sample");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("labels must be 0 or 1");
    const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    total -= labels[i] == 1 ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(probs.size());
}

}  // namespace ctxai
