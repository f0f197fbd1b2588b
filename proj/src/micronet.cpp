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

#include "ctxai/micronet.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "ctxai/numerics.hpp"

namespace ctxai {

using Eigen::Index;

Architecture Architecture::parse(std::string_view descriptor) {
  Architecture arch;
  bool saw_head = false;
  std::istringstream in{std::string(descriptor)};
  std::string tok;
  while (in >> tok) {
    if (tok == "pool") {
      if (arch.blocks.empty() || arch.blocks.back().pool) {
        throw ValidationError("'pool' must follow a conv block: " + std::string(descriptor));
      }
      arch.blocks.back().pool = true;
    } else if (tok.rfind("conv:", 0) == 0 || tok.rfind("head:", 0) == 0) {
      int value = 0;
      try {
        std::size_t used = 0;
        value = std::stoi(tok.substr(5), &used);
        if (used != tok.size() - 5) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ValidationError("bad architecture token '" + tok + "'");
      }
      if (tok[0] == 'c') {
        if (saw_head) throw ValidationError("conv block after head");
        arch.blocks.push_back({value, false});
      } else {
        arch.classes = value;
        saw_head = true;
      }
    } else {
      throw ValidationError("unknown architecture token '" + tok + "'");
    }
  }
  arch.validate();
  return arch;
}

void Architecture::validate() const {
  if (blocks.empty()) throw ValidationError("architecture has no conv blocks");
  for (const Block& b : blocks) {
    if (b.channels < 1) throw ValidationError("conv channels must be positive");
  }
  if (classes < 1) throw ValidationError("class count must be positive");
}

std::string Architecture::to_string() const {
  std::string s;
  for (const Block& b : blocks) {
    s += "conv:" + std::to_string(b.channels) + " ";
    if (b.pool) s += "pool ";
  }
  return s + "head:" + std::to_string(classes);
}

MicroNet::MicroNet(std::vector<ConvBlock> blocks, Tensor head, Tensor head_bias)
    : blocks_(std::move(blocks)), head_(std::move(head)), head_bias_(std::move(head_bias)) {
  if (blocks_.empty()) throw ValidationError("network has no conv blocks");
  Index in_channels = 1;
  for (const ConvBlock& b : blocks_) {
    const Tensor& k = b.conv.kernels;
    if (k.rank() != 4 || k.dim(1) != in_channels || k.dim(2) != 3 || k.dim(3) != 3) {
      throw ShapeError("conv kernels must be [C_out, " + std::to_string(in_channels) +
                       ", 3, 3]");
    }
    if (b.conv.bias.rank() != 1 || b.conv.bias.dim(0) != k.dim(0)) {
      throw ShapeError("conv bias must have one entry per output channel");
    }
    in_channels = k.dim(0);
  }
  if (head_.rank() != 2 || head_.dim(0) != in_channels) {
    throw ShapeError("head must be [" + std::to_string(in_channels) + ", C]");
  }
  if (head_bias_.rank() != 1 || head_bias_.dim(0) != head_.dim(1)) {
    throw ShapeError("head bias must have one entry per class");
  }
}

Architecture MicroNet::architecture() const {
  Architecture arch;
  for (const ConvBlock& b : blocks_) {
    arch.blocks.push_back({static_cast<int>(b.conv.out_channels()), b.pool});
  }
  arch.classes = static_cast<int>(classes());
  return arch;
}

namespace {

using Planes = std::vector<RowMatrixXd>;

Planes conv3x3_relu(const Planes& in, const ConvLayer& layer) {
  const Index h = in.front().rows();
  const Index w = in.front().cols();
  Planes padded;
  padded.reserve(in.size());
  for (const RowMatrixXd& plane : in) {
    RowMatrixXd p = RowMatrixXd::Zero(h + 2, w + 2);
    p.block(1, 1, h, w) = plane;
    padded.push_back(std::move(p));
  }
  Planes out;
  out.reserve(static_cast<std::size_t>(layer.out_channels()));
  for (Index co = 0; co < layer.out_channels(); ++co) {
    RowMatrixXd acc = RowMatrixXd::Constant(h, w, layer.bias(co));
    for (Index ci = 0; ci < layer.in_channels(); ++ci) {
      const RowMatrixXd& p = padded[static_cast<std::size_t>(ci)];
      for (Index ky = 0; ky < 3; ++ky) {
        for (Index kx = 0; kx < 3; ++kx) {
          const double k = layer.kernels(co, ci, ky, kx);
          if (k != 0.0) acc.noalias() += k * p.block(ky, kx, h, w);
        }
      }
    }
    out.push_back(acc.cwiseMax(0.0));
  }
  return out;
}

Planes max_pool2(const Planes& in) {
  const Index h = in.front().rows() / 2;
  const Index w = in.front().cols() / 2;
  if (h < 1 || w < 1) throw ShapeError("feature map too small to pool");
  Planes out;
  out.reserve(in.size());
  for (const RowMatrixXd& p : in) {
    RowMatrixXd q(h, w);
    for (Index i = 0; i < h; ++i) {
      for (Index j = 0; j < w; ++j) q(i, j) = p.block(2 * i, 2 * j, 2, 2).maxCoeff();
    }
    out.push_back(std::move(q));
  }
  return out;
}

Planes backbone(const MicroNet& net, const GrayImage& img) {
  if (img.height() < 8 || img.width() < 8) {
    throw ShapeError("input image must be at least 8x8");
  }
  Planes x{img.pixels()};
  for (const ConvBlock& b : net.blocks()) {
    x = conv3x3_relu(x, b.conv);
    if (b.pool) x = max_pool2(x);
  }
  return x;
}

Tensor stack(const Planes& planes) {
  const Index h = planes.front().rows();
  const Index w = planes.front().cols();
  Tensor::Vector data(static_cast<Index>(planes.size()) * h * w);
  for (std::size_t c = 0; c < planes.size(); ++c) {
    data.segment(static_cast<Index>(c) * h * w, h * w) =
        Eigen::Map<const Eigen::VectorXd>(planes[c].data(), h * w);
  }
  return Tensor({static_cast<Index>(planes.size()), h, w}, std::move(data));
}

// Feature maps as a (C', H'W') matrix: one row per channel.
Eigen::Map<const RowMatrixXd> channel_rows(const Tensor& t) {
  return Eigen::Map<const RowMatrixXd>(t.data().data(), t.dim(0), t.dim(1) * t.dim(2));
}

}  // namespace

Tensor extract_features(const MicroNet& net, const GrayImage& img) {
  return stack(backbone(net, img));
}

ForwardResult forward(const MicroNet& net, const GrayImage& img) {
  ForwardResult r;
  r.feature_maps = extract_features(net, img);
  const Index h = r.feature_maps.dim(1);
  const Index w = r.feature_maps.dim(2);
  // 1x1 convolution: A (C x HW) = W^T (C x C') * F (C' x HW).
  const RowMatrixXd act = net.head().matrix().transpose() * channel_rows(r.feature_maps);
  r.activation_maps = Tensor({net.classes(), h, w},
                             Eigen::Map<const Eigen::VectorXd>(act.data(), act.size()));
  r.scores = act.rowwise().mean().transpose() + net.head_bias().data().transpose();
  return r;
}

Eigen::VectorXd forward_fc_equivalent(const MicroNet& net, const GrayImage& img) {
  const Tensor features = extract_features(net, img);
  const Eigen::VectorXd gap = channel_rows(features).rowwise().mean();
  return net.head().matrix().transpose() * gap + net.head_bias().data();
}

namespace {

Tensor he_uniform(Rng& rng, std::vector<Index> dims, Index fan_in) {
  Tensor::Vector data(std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>()));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (Index i = 0; i < data.size(); ++i) {
    data(i) = static_cast<double>(static_cast<float>(rng.uniform(-bound, bound)));
  }
  return Tensor(std::move(dims), std::move(data));
}

}  // namespace

MicroNet net_init(std::uint64_t seed, const Architecture& arch) {
  arch.validate();
  Rng rng(seed);
  std::vector<ConvBlock> blocks;
  Index in_channels = 1;
  for (const Architecture::Block& b : arch.blocks) {
    ConvBlock block;
    block.conv.kernels = he_uniform(rng, {b.channels, in_channels, 3, 3}, in_channels * 9);
    block.conv.bias = Tensor::zeros({b.channels});
    block.pool = b.pool;
    blocks.push_back(std::move(block));
    in_channels = b.channels;
  }
  Tensor head = he_uniform(rng, {in_channels, arch.classes}, in_channels);
  return MicroNet(std::move(blocks), std::move(head), Tensor::zeros({arch.classes}));
}

MicroNet lesion_detector_net(const LesionNetParams& params) {
  const Tensor::Vector mean9 = Tensor::Vector::Constant(9, 1.0 / 9.0);
  ConvBlock detect{{Tensor({1, 1, 3, 3}, mean9), Tensor({1}, Tensor::Vector::Constant(1, -params.threshold))},
                   true};
  ConvBlock smooth{{Tensor({1, 1, 3, 3}, mean9), Tensor::zeros({1})}, true};
  return MicroNet({detect, smooth}, Tensor({1, 1}, Tensor::Vector::Constant(1, params.gain)),
                  Tensor({1}, Tensor::Vector::Constant(1, params.bias)));
}

namespace {

constexpr std::string_view kNetMagic = "XNET 1";

std::vector<std::pair<std::string, const Tensor*>> named_tensors(const MicroNet& net) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (std::size_t i = 0; i < net.blocks().size(); ++i) {
    const std::string prefix = "block" + std::to_string(i);
    out.emplace_back(prefix + ".kernels", &net.blocks()[i].conv.kernels);
    out.emplace_back(prefix + ".bias", &net.blocks()[i].conv.bias);
  }
  out.emplace_back("head.weights", &net.head());
  out.emplace_back("head.bias", &net.head_bias());
  return out;
}

}  // namespace

std::string net_encode(const MicroNet& net) {
  const auto tensors = named_tensors(net);
  std::string manifest = std::string(kNetMagic) + "\n";
  manifest += "arch " + net.architecture().to_string() + "\n";
  manifest += "tensors " + std::to_string(tensors.size()) + "\n";
  std::string blobs;
  for (const auto& [name, t] : tensors) {
    const std::string blob = tensor_encode(*t);
    manifest += name + " " + std::to_string(blob.size()) + "\n";
    blobs += blob;
  }
  return manifest + blobs;
}

MicroNet net_decode(std::string_view bytes) {
  std::size_t pos = 0;
  auto next_line = [&]() {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) throw FormatError("truncated model manifest", bytes.size());
    std::string_view line = bytes.substr(pos, nl - pos);
    const std::size_t start = pos;
    pos = nl + 1;
    return std::pair{line, start};
  };
  auto [magic, magic_at] = next_line();
  if (magic != kNetMagic) throw FormatError("bad model magic", magic_at);
  auto [arch_line, arch_at] = next_line();
  if (arch_line.rfind("arch ", 0) != 0) throw FormatError("expected 'arch' line", arch_at);
  Architecture arch;
  try {
    arch = Architecture::parse(arch_line.substr(5));
  } catch (const ValidationError& e) {
    throw FormatError(e.what(), arch_at);
  }
  auto [count_line, count_at] = next_line();
  std::size_t count = 0;
  try {
    if (count_line.rfind("tensors ", 0) != 0) throw std::invalid_argument("tensors");
    count = std::stoul(std::string(count_line.substr(8)));
  } catch (const std::exception&) {
    throw FormatError("expected 'tensors <count>' line", count_at);
  }
  const std::size_t expected_count = 2 * arch.blocks.size() + 2;
  if (count != expected_count) {
    throw FormatError("manifest lists " + std::to_string(count) + " tensors, architecture needs " +
                          std::to_string(expected_count),
                      count_at);
  }
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (std::size_t i = 0; i < count; ++i) {
    auto [line, at] = next_line();
    const std::size_t sp = line.rfind(' ');
    if (sp == std::string_view::npos) throw FormatError("bad manifest entry", at);
    try {
      entries.emplace_back(std::string(line.substr(0, sp)),
                           std::stoul(std::string(line.substr(sp + 1))));
    } catch (const std::exception&) {
      throw FormatError("bad manifest entry size", at);
    }
  }

  std::vector<Tensor> tensors;
  for (const auto& [name, size] : entries) {
    if (pos + size > bytes.size()) throw FormatError("truncated tensor '" + name + "'", bytes.size());
    auto [t, used] = tensor_decode(bytes.substr(pos, size), pos);
    if (used != size) throw FormatError("tensor '" + name + "' size mismatch", pos);
    pos += size;
    tensors.push_back(std::move(t));
  }
  if (pos != bytes.size()) throw FormatError("trailing bytes after model tensors", pos);

  std::vector<ConvBlock> blocks;
  for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
    blocks.push_back({{tensors[2 * i], tensors[2 * i + 1]}, arch.blocks[i].pool});
  }
  try {
    MicroNet net(std::move(blocks), tensors[count - 2], tensors[count - 1]);
    const auto names = named_tensors(net);
    for (std::size_t i = 0; i < count; ++i) {
      if (names[i].first != entries[i].first) {
        throw ShapeError("expected tensor '" + names[i].first + "', found '" + entries[i].first + "'");
      }
    }
    if (net.feature_channels() != arch.blocks.back().channels || net.classes() != arch.classes) {
      throw ShapeError("tensor shapes disagree with declared architecture");
    }
    for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
      if (net.blocks()[i].conv.out_channels() != arch.blocks[i].channels) {
        throw ShapeError("tensor shapes disagree with declared architecture");
      }
    }
    return net;
  } catch (const ShapeError& e) {
    throw FormatError(e.what(), arch_at);
  }
}

void net_save(const MicroNet& net, const std::filesystem::path& path) {
  write_file_bytes(path, net_encode(net));
}

MicroNet net_load(const std::filesystem::path& path) { return net_decode(read_file_bytes(path)); }

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

std::string net_hash(const MicroNet& net) { return fnv1a_hex(net_encode(net)); }

Scorer class_scorer(const MicroNet& net, int class_index) {
  if (class_index < 0 || class_index >= net.classes()) {
    throw ValidationError("class index " + std::to_string(class_index) + " out of range");
  }
  auto shared = std::make_shared<const MicroNet>(net);
  return [shared, class_index](const GrayImage& img) {
    return forward(*shared, img).scores(class_index);
  };
}

}  // namespace ctxai
