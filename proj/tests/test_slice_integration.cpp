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

#include <algorithm>
#include <cmath>
#include <functional>

#include "ctxai/numerics.hpp"
#include "ctxai/slice_integration.hpp"
#include "doctest.h"

using namespace ctxai;

namespace {

// Sort-and-average reference for a section probability.
double reference_section_prob(std::vector<double> s, std::size_t k) {
  std::sort(s.begin(), s.end(), std::greater<>());
  const std::size_t take = std::min(k, s.size());
  double sum = 0;
  for (std::size_t i = 0; i < take; ++i) sum += s[i];
  return 1.0 / (1.0 + std::exp(-sum / take));
}

}  // namespace

TEST_CASE("section partition examples") {
  auto sizes = [](const SectionPartition& p) {
    std::vector<std::size_t> out;
    for (const auto& s : p.sections) out.push_back(s.size());
    return out;
  };
  CHECK(sizes(partition_sections(20, 8)) == std::vector<std::size_t>{10, 10});
  CHECK(sizes(partition_sections(5, 8)) == std::vector<std::size_t>{5});
  CHECK(sizes(partition_sections(8, 8)) == std::vector<std::size_t>{8});
  CHECK(sizes(partition_sections(19, 4)) == std::vector<std::size_t>{5, 5, 5, 4});
  CHECK(partition_sections(5, 8).sections[0] == SliceRange{0, 5});
  CHECK_THROWS_AS(partition_sections(0, 8), ValidationError);
  CHECK_THROWS_AS(partition_sections(4, 0), ValidationError);
}

TEST_CASE("section partition covers [0,n) for n <= 64, l_s <= 16") {
  for (std::size_t n = 1; n <= 64; ++n) {
    for (std::size_t ls = 1; ls <= 16; ++ls) {
      const SectionPartition p = partition_sections(n, ls);
      REQUIRE(p.sections.size() == std::max<std::size_t>(1, n / ls));
      std::size_t expect = 0, lo = n, hi = 0;
      for (const auto& s : p.sections) {
        CHECK(s.begin == expect);
        CHECK(s.end > s.begin);
        expect = s.end;
        lo = std::min(lo, s.size());
        hi = std::max(hi, s.size());
      }
      CHECK(expect == n);
      CHECK(hi - lo <= 1);
    }
  }
}

TEST_CASE("section_prob") {
  const std::vector<double> s{2, 0, -2};
  CHECK(section_prob(s, 2) == doctest::Approx(0.7310585786300049).epsilon(1e-14));
  for (std::size_t k : {1, 3, 10}) CHECK(section_prob(std::vector<double>{0.0}, k) == 0.5);
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + rng.uniform_index(12));
    for (double& x : v) x = rng.normal() * 3;
    const std::size_t k = 1 + rng.uniform_index(15);
    CHECK(section_prob(v, k) == doctest::Approx(reference_section_prob(v, k)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(section_prob(std::vector<double>{}, 2), ValidationError);
  CHECK_THROWS_AS(section_prob(s, 0), ValidationError);
}

TEST_CASE("noisy-OR examples") {
  CHECK(noisy_or(std::vector<double>{0.7}) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(std::abs(noisy_or(std::vector<double>{0.3, 0.4}) - 0.58) < 1e-12);
  CHECK(noisy_or(std::vector<double>{0.2, 1.0, 0.1}) == 1.0);
}

TEST_CASE("patient probability bounds and permutation invariance") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(40);
    std::vector<double> scores(n);
    for (double& s : scores) s = rng.normal() * 2;
    const SectionPartition part = partition_sections(n, 1 + rng.uniform_index(10));
    const PatientScore ps = patient_prob(scores, part, 2);
    const double top = *std::max_element(ps.section_probs.begin(), ps.section_probs.end());
    CHECK(ps.probability >= top - 1e-15);
    CHECK(ps.probability <= 1.0);

    // Shuffle within each section.
    std::vector<double> shuffled = scores;
    for (const auto& s : part.sections) {
      for (std::size_t i = s.end - 1; i > s.begin; --i) {
        std::swap(shuffled[i], shuffled[s.begin + rng.uniform_index(i - s.begin + 1)]);
      }
    }
    CHECK(patient_prob(shuffled, part, 2).probability == doctest::Approx(ps.probability).epsilon(1e-14));

    // Reversing section order leaves the product unchanged.
    std::vector<double> reversed_sections = ps.section_probs;
    std::reverse(reversed_sections.begin(), reversed_sections.end());
    CHECK(noisy_or(reversed_sections) == doctest::Approx(ps.probability).epsilon(1e-14));
  }
}

TEST_CASE("single active section gives that section's probability") {
  const std::vector<double> probs{0.0, 0.63, 0.0};
  CHECK(noisy_or(probs) == 0.63);
}

TEST_CASE("patient_prob rejects a mismatched partition") {
  const std::vector<double> scores(10, 0.0);
  CHECK_THROWS_AS(patient_prob(scores, partition_sections(12, 4), 2), ValidationError);
}

TEST_CASE("bce loss") {
  CHECK(bce_loss(std::vector<double>{1.0}, std::vector<int>{1}) <= 1e-11);
  CHECK(bce_loss(std::vector<double>{0.5}, std::vector<int>{1}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(bce_loss(std::vector<double>{0.9, 0.2}, std::vector<int>{1, 0}) ==
        doctest::Approx(0.164252033486018).epsilon(1e-12));
  CHECK(bce_loss(std::vector<double>{0.0}, std::vector<int>{0}) <= 1e-11);
  CHECK(std::isfinite(bce_loss(std::vector<double>{0.0}, std::vector<int>{1})));
  CHECK_THROWS_AS(bce_loss(std::vector<double>{0.5}, std::vector<int>{1, 0}), ValidationError);
  CHECK_THROWS_AS(bce_loss(std::vector<double>{0.5}, std::vector<int>{2}), ValidationError);

  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> p(5);
    std::vector<int> y(5);
    for (int i = 0; i < 5; ++i) {
      p[i] = rng.uniform();
      y[i] = rng.bernoulli(0.5);
    }
    CHECK(bce_loss(p, y) >= 0.0);
  }
}

TEST_CASE("patient volume validation") {
  PatientVolume v;
  CHECK_THROWS_AS(v.validate(), ValidationError);
  v.slices = {GrayImage::constant(8, 8, 0), GrayImage::constant(8, 9, 0)};
  CHECK_THROWS_AS(v.validate(), ShapeError);
  v.slices = {GrayImage::constant(8, 8, 0)};
  v.label = 3;
  CHECK_THROWS_AS(v.validate(), ValidationError);
  v.label = 1;
  CHECK_NOTHROW(v.validate());
}
