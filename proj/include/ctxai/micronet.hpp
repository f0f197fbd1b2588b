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

#ifndef CTXAI_MICRONET_HPP
#define CTXAI_MICRONET_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxai/image.hpp"
#include "ctxai/tensor.hpp"

namespace ctxai {

// Plain-text architecture descriptor, e.g. "conv:8 pool conv:16 pool head:1".
// Each conv:N opens a 3x3 same-padding conv + ReLU block; `pool` appends a
// 2x2 max-pool to the preceding block; head:C sets the class count.
struct Architecture {
  struct Block {
    int channels = 0;
    bool pool = false;
  };
  std::vector<Block> blocks;
  int classes = 1;

  static Architecture parse(std::string_view descriptor);
  static Architecture default_arch() { return parse("conv:8 pool conv:16 pool head:1"); }
  std::string to_string() const;
  void validate() const;
};

struct ConvLayer {
  Tensor kernels;  // [C_out, C_in, 3, 3]
  Tensor bias;     // [C_out]

  Eigen::Index out_channels() const { return kernels.dim(0); }
  Eigen::Index in_channels() const { return kernels.dim(1); }
};

struct ConvBlock {
  ConvLayer conv;
  bool pool = false;
};

// Forward-only scorer: conv blocks followed by a 1x1 convolution head whose
// spatial mean (plus bias) is the class score. Immutable after construction.
class MicroNet {
 public:
  MicroNet(std::vector<ConvBlock> blocks, Tensor head, Tensor head_bias);

  const std::vector<ConvBlock>& blocks() const { return blocks_; }
  const Tensor& head() const { return head_; }            // [C', C]
  const Tensor& head_bias() const { return head_bias_; }  // [C]
  Eigen::Index feature_channels() const { return head_.dim(0); }
  Eigen::Index classes() const { return head_.dim(1); }
  Architecture architecture() const;

 private:
  std::vector<ConvBlock> blocks_;
  Tensor head_;
  Tensor head_bias_;
};

struct ForwardResult {
  Tensor feature_maps;     // [C', H', W']
  Tensor activation_maps;  // [C, H', W']
  Eigen::VectorXd scores;  // [C]
};

// Backbone only: last-block feature maps [C', H', W'].
Tensor extract_features(const MicroNet& net, const GrayImage& img);

// s_c = mean_ij (A_c)_ij + b_c with A_c = sum_d W_dc F^d.
ForwardResult forward(const MicroNet& net, const GrayImage& img);

// Pool first, project second: s_c = sum_d W_dc GAP(F^d) + b_c.
Eigen::VectorXd forward_fc_equivalent(const MicroNet& net, const GrayImage& img);

// He-scaled uniform weights (bound sqrt(6 / fan_in)), zero biases. Weights are
// rounded to f32 so that a saved model reloads bit-identically.
MicroNet net_init(std::uint64_t seed, const Architecture& arch);

// Analytic bright-blob detector. Block 1 averages a 3x3 window and subtracts
// `threshold`, so only pixels brighter than the threshold survive the ReLU;
// block 2 smooths that response. The head scales the mean response by `gain`
// and adds `bias`, which is therefore the logit of a lesion-free slice.
struct LesionNetParams {
  double threshold = 0.5;
  double gain = 2000.0;
  double bias = -3.0;
};
MicroNet lesion_detector_net(const LesionNetParams& params = {});

// Model file: text manifest followed by concatenated XTEN blobs.
std::string net_encode(const MicroNet& net);
MicroNet net_decode(std::string_view bytes);
void net_save(const MicroNet& net, const std::filesystem::path& path);
MicroNet net_load(const std::filesystem::path& path);

// 64-bit FNV-1a of the encoded model, as 16 hex digits.
std::string net_hash(const MicroNet& net);
std::string fnv1a_hex(std::string_view bytes);

// Black-box scorer contract used by the explainers: image -> logit.
using Scorer = std::function<double(const GrayImage&)>;
Scorer class_scorer(const MicroNet& net, int class_index = 0);

}  // namespace ctxai

#endif  // CTXAI_MICRONET_HPP
