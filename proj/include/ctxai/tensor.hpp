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

#ifndef CTXAI_TENSOR_HPP
#define CTXAI_TENSOR_HPP

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctxai/errors.hpp"

namespace ctxai {

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXd = RowMatrix<double>;

// Dense row-major array of rank 1 to 4. Immutable once constructed; every
// constructor rejects non-finite values. Feature maps use [channels, height,
// width] ordering.
template <typename Scalar>
class BasicTensor {
 public:
  using Index = Eigen::Index;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

  static constexpr int kMaxRank = 4;

  // Empty rank-0 tensor holding no values.
  BasicTensor() = default;

  BasicTensor(std::vector<Index> dims, Vector data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    if (dims_.empty() || dims_.size() > kMaxRank) {
      throw ValidationError("tensor rank must be between 1 and 4, got " +
                            std::to_string(dims_.size()));
    }
    Index expected = 1;
    for (Index d : dims_) {
      if (d <= 0) throw ValidationError("tensor dims must be positive");
      expected *= d;
    }
    if (expected != data_.size()) {
      throw ValidationError("tensor data length " +
                            std::to_string(data_.size()) +
                            " does not match product of dims " +
                            std::to_string(expected));
    }
    if (!data_.allFinite()) {
      throw ValidationError("tensor contains non-finite values");
    }
  }

  static BasicTensor zeros(std::vector<Index> dims) {
    Index n = std::accumulate(dims.begin(), dims.end(), Index{1},
                              std::multiplies<>());
    return BasicTensor(std::move(dims), Vector::Zero(n));
  }

  // Rank-2 tensor copied from any dense Eigen expression.
  template <typename Derived>
  static BasicTensor from_matrix(const Eigen::DenseBase<Derived>& m) {
    RowMatrix<Scalar> tmp = m;
    return BasicTensor({tmp.rows(), tmp.cols()},
                       Eigen::Map<const Vector>(tmp.data(), tmp.size()));
  }

  template <typename Derived>
  static BasicTensor from_vector(const Eigen::DenseBase<Derived>& v) {
    Vector tmp = v;
    const Index n = tmp.size();
    return BasicTensor({n}, std::move(tmp));
  }

  const std::vector<Index>& dims() const { return dims_; }
  Index dim(int axis) const { return dims_.at(static_cast<std::size_t>(axis)); }
  int rank() const { return static_cast<int>(dims_.size()); }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }
  const Vector& data() const { return data_; }

  Scalar operator()(Index i) const { return data_(i); }
  Scalar operator()(Index i, Index j) const { return data_(i * dims_[1] + j); }
  Scalar operator()(Index i, Index j, Index k) const {
    return data_((i * dims_[1] + j) * dims_[2] + k);
  }
  Scalar operator()(Index i, Index j, Index k, Index l) const {
    return data_(((i * dims_[1] + j) * dims_[2] + k) * dims_[3] + l);
  }

  // Rank-2 view.
  ConstMatrixMap matrix() const {
    require_rank(2);
    return ConstMatrixMap(data_.data(), dims_[0], dims_[1]);
  }

  // Plane `c` of a rank-3 tensor, viewed as dims[1] x dims[2].
  ConstMatrixMap plane(Index c) const {
    require_rank(3);
    const Index stride = dims_[1] * dims_[2];
    return ConstMatrixMap(data_.data() + c * stride, dims_[1], dims_[2]);
  }

  template <typename NewScalar>
  BasicTensor<NewScalar> cast() const {
    return BasicTensor<NewScalar>(dims_, data_.template cast<NewScalar>());
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  void require_rank(int r) const {
    if (rank() != r) {
      throw ShapeError("expected rank-" + std::to_string(r) +
                       " tensor, got rank " + std::to_string(rank()));
    }
  }

  std::vector<Index> dims_;
  Vector data_;
};

using Tensor = BasicTensor<double>;

// XTEN container: "XTEN", u8 rank, rank x u32 LE dims, f32 LE payload.
// Values are narrowed to f32 on write and promoted to f64 on read.
std::string tensor_encode(const Tensor& t);
// `base_offset` shifts reported error offsets when the blob is embedded in a
// larger file. Returns the decoded tensor and the number of bytes consumed.
std::pair<Tensor, std::size_t> tensor_decode(std::string_view bytes,
                                             std::size_t base_offset = 0);

void tensor_write(const Tensor& t, const std::filesystem::path& path);
Tensor tensor_read(const std::filesystem::path& path);

// Whole-file helpers shared by every reader and writer in the library.
std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace ctxai

#endif  // CTXAI_TENSOR_HPP
