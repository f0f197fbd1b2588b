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

#ifndef CTXAI_ERRORS_HPP
#define CTXAI_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctxai {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents. `offset` is the byte position of the problem.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// A value or argument violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Incompatible tensor or image dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, long effective_rank)
      : Error(what + " (effective rank " + std::to_string(effective_rank) + ")"),
        effective_rank_(effective_rank) {}
  long effective_rank() const { return effective_rank_; }

 private:
  long effective_rank_;
};

// Request exceeds a hard computational limit.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// The black-box scorer failed while explaining.
class ExplanationError : public Error {
 public:
  ExplanationError(const std::string& what, std::size_t sample_index)
      : Error("sample " + std::to_string(sample_index) + ": " + what),
        sample_index_(sample_index) {}
  std::size_t sample_index() const { return sample_index_; }

 private:
  std::size_t sample_index_;
};

}  // namespace ctxai

#endif  // CTXAI_ERRORS_HPP
