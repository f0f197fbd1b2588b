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


#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "ctxai/cam.hpp"
#include "ctxai/errors.hpp"
#include "ctxai/explainers.hpp"
#include "ctxai/micronet.hpp"
#include "ctxai/parallel.hpp"
#include "ctxai/slice_integration.hpp"
#include "ctxai/superpixel.hpp"
#include "ctxai/synthetic.hpp"
#include "json.hpp"

namespace ctxai::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using Eigen::Index;

// Input-side failure tagged with the offending path.
class InputError : public Error {
 public:
  using Error::Error;
};

std::string num(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

template <typename Fn>
auto with_path(const fs::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& e) {
    throw InputError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw InputError(path.string() + ": " + e.what());
  } catch (const ShapeError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

struct LoadedImage {
  GrayImage image;
  std::string hash;
};

LoadedImage load_image(const fs::path& path) {
  return with_path(path, [&] {
    const std::string bytes = read_file_bytes(path);
    return LoadedImage{image_decode_pgm(bytes), fnv1a_hex(bytes)};
  });
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_json(const fs::path& path, const Json& j) { write_file_bytes(path, j.dump(2) + "\n"); }

Json to_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Tensor rgb_overlay(const RowMatrixXd& r, const RowMatrixXd& g, const RowMatrixXd& b) {
  Tensor::Vector rgb(3 * r.size());
  for (Index i = 0; i < r.size(); ++i) rgb.segment<3>(3 * i) << r.data()[i], g.data()[i], b.data()[i];
  return Tensor({r.rows(), r.cols(), 3}, std::move(rgb));
}

// ---------------------------------------------------------------------------
// Shared flag groups

struct ModelFlags {
  std::string model;
  std::string arch;
  std::uint64_t net_seed = 0;
  int class_index = 0;
};

void add_model_flags(CLI::App* app, ModelFlags& f) {
  auto* model = app->add_option("--model", f.model, "XNET model file (built-in lesion detector when omitted)");
  auto* arch = app->add_option("--arch", f.arch, "architecture of a seeded random net, e.g. \"conv:8 pool conv:16 pool head:1\"");
  model->excludes(arch);
  app->add_option("--net-seed", f.net_seed, "weight seed used with --arch");
  app->add_option("--class", f.class_index, "class index")->check(CLI::NonNegativeNumber);
}

struct LoadedModel {
  MicroNet net;
  std::string source;
  std::string hash;
};

LoadedModel load_model(const ModelFlags& f) {
  LoadedModel m{lesion_detector_net(), "builtin-lesion", ""};
  if (!f.model.empty()) {
    m.net = with_path(f.model, [&] { return net_load(f.model); });
    m.source = "file";
  } else if (!f.arch.empty()) {
    m.net = net_init(f.net_seed, Architecture::parse(f.arch));
    m.source = "seeded";
  }
  if (f.class_index >= m.net.classes()) {
    throw ValidationError("--class " + std::to_string(f.class_index) + " out of range for a " +
                          std::to_string(m.net.classes()) + "-class model");
  }
  m.hash = net_hash(m.net);
  return m;
}

Json model_provenance(const LoadedModel& m, const ModelFlags& f) {
  Json j;
  j["model"] = m.source;
  j["model_hash"] = m.hash;
  j["arch"] = m.net.architecture().to_string();
  if (m.source == "seeded") j["net_seed"] = f.net_seed;
  return j;
}

struct SlicFlags {
  int segments = 50;
  double compactness = 10.0;
  int iters = 10;
  std::uint64_t slic_seed = 0;

  SlicParams params() const { return {segments, compactness, iters, slic_seed}; }
  Json to_json() const {
    return Json{{"segments", segments}, {"compactness", compactness}, {"iters", iters}, {"slic_seed", slic_seed}};
  }
};

void add_slic_flags(CLI::App* app, SlicFlags& f) {
  app->add_option("--segments", f.segments, "target superpixel count")->check(CLI::Range(2, 1 << 20));
  app->add_option("--compactness", f.compactness, "SLIC compactness")->check(CLI::PositiveNumber);
  app->add_option("--iters", f.iters, "SLIC k-means iterations")->check(CLI::Range(1, 1000));
  app->add_option("--slic-seed", f.slic_seed, "seed for SLIC tie-breaking");
}

Json segments_json(const SuperpixelMap& sp) {
  Json arr = Json::array();
  for (int i = 0; i < sp.n_segments; ++i) {
    const Segment& s = sp.centroids[static_cast<std::size_t>(i)];
    arr.push_back({{"id", i}, {"row", s.row}, {"col", s.col}, {"pixels", s.pixels}, {"mean_intensity", s.mean_intensity}});
  }
  return arr;
}

// ---------------------------------------------------------------------------
// gen-corpus

struct CorpusFlags {
  std::string out;
  int patients = 4;
  int slices = 20;
  int size = 224;
  double noise = 0.02;
  double positive = 0.5;
  std::uint64_t seed = 0;
};

std::string indexed(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03d", prefix, i);
  return buf;
}

Json lesion_json(const LesionSpec& l) {
  return Json{{"row", l.row}, {"col", l.col}, {"radius", l.radius}, {"intensity", l.intensity}, {"softness", l.softness}};
}

int cmd_gen_corpus(const CorpusFlags& f, std::ostream& out) {
  const fs::path root(f.out);
  ensure_dir(root);
  const MicroNet net = lesion_detector_net();
  net_save(net, root / "lesion_net.xnet");

  Json manifest;
  manifest["command"] = "gen-corpus";
  manifest["parameters"] = {{"patients", f.patients}, {"slices", f.slices}, {"size", f.size},
                            {"noise", f.noise}, {"positive_fraction", f.positive}};
  manifest["provenance"] = {{"seed", f.seed}, {"model", "builtin-lesion"}, {"model_hash", net_hash(net)}};
  Json patients = Json::array();
  int n_positive = 0;
  for (int p = 0; p < f.patients; ++p) {
    // Spread positives evenly through the patient list.
    const bool positive = std::floor((p + 1) * f.positive) > std::floor(p * f.positive);
    const std::uint64_t pseed = derive_seed(f.seed, static_cast<std::uint64_t>(p));
    const VolumeSpec spec = random_volume_spec(pseed, positive, static_cast<std::size_t>(f.slices), f.size,
                                               f.size, f.noise);
    const SyntheticVolume vol = gen_volume(spec);
    const fs::path dir = root / indexed("patient", p);
    ensure_dir(dir);
    for (std::size_t i = 0; i < vol.volume.slices.size(); ++i) {
      image_write_pgm(vol.volume.slices[i], dir / (indexed("slice", static_cast<int>(i)) + ".pgm"));
      image_write_pgm(GrayImage(vol.masks[i].cast<double>()), dir / (indexed("mask", static_cast<int>(i)) + ".pgm"));
    }
    Json lesions = Json::array();
    for (const auto& list : spec.lesions)
      for (const LesionSpec& l : list) lesions.push_back(lesion_json(l));
    patients.push_back({{"id", indexed("patient", p)},
                        {"label", *vol.volume.label},
                        {"lesion_slices", {spec.lesion_slices.begin, spec.lesion_slices.end}},
                        {"lesions", lesions},
                        {"volume_seed", spec.seed}});
    n_positive += *vol.volume.label;
  }
  manifest["patients"] = patients;
  write_json(root / "manifest.json", manifest);
  out << "wrote " << f.patients << " patients (" << n_positive << " positive) x " << f.slices
      << " slices of " << f.size << "x" << f.size << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// segment

struct SegmentFlags {
  std::string image;
  std::string out = ".";
  SlicFlags slic;
};

int cmd_segment(const SegmentFlags& f, std::ostream& out) {
  const LoadedImage in = load_image(f.image);
  const SuperpixelMap sp = slic_segment(in.image, f.slic.params());
  const fs::path dir(f.out);
  ensure_dir(dir);
  tensor_write(Tensor::from_matrix(sp.labels.cast<double>()), dir / "labels.xten");
  image_write_ppm(in.image, segment_overlay(sp, f.slic.slic_seed), dir / "segments.ppm");
  Json j;
  j["command"] = "segment";
  j["parameters"] = f.slic.to_json();
  j["n_segments"] = sp.n_segments;
  j["segments"] = segments_json(sp);
  j["provenance"] = {{"seed", f.slic.slic_seed}, {"image_hash", in.hash}};
  write_json(dir / "segments.json", j);
  out << sp.n_segments << " superpixels on " << in.image.height() << "x" << in.image.width() << " image\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// patient-score

struct PatientFlags {
  std::string slices;
  std::size_t ls = kDefaultSectionLength;
  std::size_t k = kDefaultTopK;
  std::optional<int> label;
  bool json = false;
  unsigned threads = 0;
  ModelFlags model;
};

std::vector<fs::path> list_slices(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw InputError(dir.string() + ": not a readable directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const fs::path& p = entry.path();
    if (!entry.is_regular_file() || p.extension() != ".pgm") continue;
    if (p.filename().string().starts_with("mask")) continue;
    files.push_back(p);
  }
  if (ec) throw InputError(dir.string() + ": " + ec.message());
  if (files.empty()) throw InputError(dir.string() + ": no slice PGM files");
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

int cmd_patient_score(const PatientFlags& f, std::ostream& out) {
  const LoadedModel m = load_model(f.model);
  const std::vector<fs::path> files = list_slices(f.slices);
  PatientVolume vol;
  vol.label = f.label;
  std::vector<std::string> hashes;
  for (const fs::path& p : files) {
    LoadedImage li = load_image(p);
    vol.slices.push_back(std::move(li.image));
    hashes.push_back(std::move(li.hash));
  }
  vol.validate();

  std::vector<double> scores(vol.slices.size());
  parallel_for(scores.size(), f.threads, [&](std::size_t i) {
    scores[i] = forward(m.net, vol.slices[i]).scores(f.model.class_index);
  });
  const SectionPartition part = partition_sections(scores.size(), f.ls);
  const PatientScore ps = patient_prob(scores, part, f.k);
  std::optional<double> loss;
  if (f.label) {
    const double p = ps.probability;
    const int y = *f.label;
    loss = bce_loss(std::span<const double>(&p, 1), std::span<const int>(&y, 1));
  }

  if (f.json) {
    Json j;
    j["command"] = "patient-score";
    j["parameters"] = {{"ls", f.ls}, {"k", f.k}, {"class", f.model.class_index}};
    Json slices = Json::array();
    for (std::size_t i = 0; i < files.size(); ++i) {
      slices.push_back({{"file", files[i].filename().string()}, {"score", scores[i]}, {"image_hash", hashes[i]}});
    }
    j["slices"] = slices;
    Json sections = Json::array();
    for (std::size_t s = 0; s < part.sections.size(); ++s) {
      sections.push_back({{"begin", part.sections[s].begin}, {"end", part.sections[s].end},
                          {"probability", ps.section_probs[s]}});
    }
    j["sections"] = sections;
    j["patient_probability"] = ps.probability;
    if (f.label) {
      j["label"] = *f.label;
      j["bce_loss"] = *loss;
    }
    j["provenance"] = model_provenance(m, f.model);
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    out << "slice " << files[i].filename().string() << " score " << num(scores[i]) << "\n";
  }
  for (std::size_t s = 0; s < part.sections.size(); ++s) {
    out << "section " << s << " slices " << part.sections[s].begin << ".." << part.sections[s].end - 1
        << " prob " << num(ps.section_probs[s]) << "\n";
  }
  out << "patient_prob " << num(ps.probability) << "\n";
  if (loss) out << "bce_loss " << num(*loss) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cam

struct CamFlags {
  std::string image;
  std::string out = ".";
  double threshold = kDefaultThresholdFrac;
  Index min_area = kDefaultMinArea;
  ModelFlags model;
};

int cmd_cam(const CamFlags& f, std::ostream& out) {
  const LoadedModel m = load_model(f.model);
  const LoadedImage in = load_image(f.image);
  const ForwardResult fr = forward(m.net, in.image);
  const int c = f.model.class_index;
  const Heatmap hm = heatmap_from_activation(fr.activation_maps.plane(c), in.image.height(), in.image.width(), c);
  const std::vector<BBox> boxes = extract_bboxes(hm, f.threshold, f.min_area);

  RgbImage rgb = blend_overlay(in.image, heat_overlay(hm));
  for (const BBox& b : boxes) draw_box(rgb, b.top, b.left, b.bottom, b.right);
  const fs::path dir(f.out);
  ensure_dir(dir);
  image_write_ppm(rgb, dir / "cam_overlay.ppm");
  tensor_write(hm.values, dir / "heatmap.xten");

  Index arg = 0;
  hm.values.data().maxCoeff(&arg);
  Json jb = Json::array();
  for (const BBox& b : boxes) {
    jb.push_back({{"top", b.top}, {"left", b.left}, {"bottom", b.bottom}, {"right", b.right},
                  {"score", b.score}, {"area", b.area}});
  }
  Json j;
  j["command"] = "cam";
  j["parameters"] = {{"class", c}, {"threshold", f.threshold}, {"min_area", f.min_area}};
  j["score"] = fr.scores(c);
  j["scores"] = to_json(fr.scores);
  j["heatmap_argmax"] = {{"row", arg / hm.width()}, {"col", arg % hm.width()}};
  j["boxes"] = jb;
  Json prov = model_provenance(m, f.model);
  prov["image_hash"] = in.hash;
  j["provenance"] = prov;
  write_json(dir / "cam.json", j);

  out << "class " << c << " score " << num(fr.scores(c)) << "\n";
  out << "heatmap argmax row " << arg / hm.width() << " col " << arg % hm.width() << "\n";
  for (const BBox& b : boxes) {
    out << "box top " << b.top << " left " << b.left << " bottom " << b.bottom << " right " << b.right
        << " score " << num(b.score) << " area " << b.area << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// lime / shap

struct ExplainFlags {
  std::string image;
  std::string out = ".";
  int samples = kDefaultSamples;
  std::uint64_t seed = 0;
  double fill = 0.0;
  unsigned threads = 0;
  // lime only
  double sigma = kDefaultSigma;
  double lambda_ratio = kDefaultLambdaRatio;
  std::optional<double> lambda;
  // shap only
  bool exact = false;
  SlicFlags slic;
  ModelFlags model;
};

void add_explain_flags(CLI::App* app, ExplainFlags& f) {
  app->add_option("--image", f.image, "input slice (PGM)")->required();
  app->add_option("--out", f.out, "output directory");
  app->add_option("--samples", f.samples, "coalition samples M")->check(CLI::Range(3, 1 << 24));
  app->add_option("--seed", f.seed, "sampling seed");
  app->add_option("--fill", f.fill, "intensity used for masked superpixels")->check(CLI::Range(0.0, 1.0));
  app->add_option("--threads", f.threads, "scorer threads (0 = all cores)");
  add_slic_flags(app, f.slic);
  add_model_flags(app, f.model);
}

void write_attribution(const std::string& name, const Attribution& a, const SuperpixelMap& sp,
                       const LoadedImage& in, const LoadedModel& m, const ExplainFlags& f, Json params,
                       std::ostream& out) {
  const fs::path dir(f.out);
  ensure_dir(dir);

  const Eigen::VectorXd pos = a.weights.cwiseMax(0.0);
  const double pos_max = pos.maxCoeff();
  const double abs_max = a.weights.cwiseAbs().maxCoeff();
  const RowMatrixXd zero = RowMatrixXd::Zero(sp.height(), sp.width());
  const RowMatrixXd red = pos_max > 0 ? paint_segments(sp, pos / pos_max) : zero;
  image_write_ppm(in.image, rgb_overlay(red, zero, zero), dir / (name + "_positive.ppm"));
  RowMatrixXd sr = zero, sb = zero;
  if (abs_max > 0) {
    sr = paint_segments(sp, pos / abs_max);
    sb = paint_segments(sp, (-a.weights).cwiseMax(0.0) / abs_max);
  }
  image_write_ppm(in.image, rgb_overlay(sr, zero, sb), dir / (name + "_signed.ppm"));

  params["slic"] = f.slic.to_json();
  params["samples"] = f.samples;
  params["fill"] = f.fill;
  params["class"] = f.model.class_index;
  Json j;
  j["command"] = name;
  j["method"] = std::string(method_name(a.method));
  j["parameters"] = params;
  j["intercept"] = a.intercept;
  j["n_samples"] = a.n_samples;
  if (a.method == AttributionMethod::kLime) {
    j["lambda"] = a.lambda;
    j["converged"] = a.converged;
  }
  Json units = Json::array();
  for (int i = 0; i < sp.n_segments; ++i) {
    const Segment& s = sp.centroids[static_cast<std::size_t>(i)];
    units.push_back({{"segment", i}, {"row", s.row}, {"col", s.col}, {"pixels", s.pixels}, {"weight", a.weights(i)}});
  }
  j["attributions"] = units;
  Json prov = model_provenance(m, f.model);
  prov["seed"] = f.seed;
  prov["image_hash"] = in.hash;
  j["provenance"] = prov;
  write_json(dir / (name + ".json"), j);

  out << method_name(a.method) << ": " << sp.n_segments << " superpixels, " << a.n_samples
      << " coalitions, intercept " << num(a.intercept) << "\n";
  out << pad("segment", 8) << pad("row", 9) << pad("col", 9) << pad("pixels", 8) << pad("weight", 13) << "\n";
  for (int i = 0; i < sp.n_segments; ++i) {
    const Segment& s = sp.centroids[static_cast<std::size_t>(i)];
    out << pad(std::to_string(i), 8) << pad(num(s.row, 1), 9) << pad(num(s.col, 1), 9)
        << pad(std::to_string(s.pixels), 8) << pad(num(a.weights(i)), 13) << "\n";
  }
}

int cmd_lime(const ExplainFlags& f, std::ostream& out) {
  const LoadedModel m = load_model(f.model);
  const LoadedImage in = load_image(f.image);
  const SuperpixelMap sp = slic_segment(in.image, f.slic.params());
  LimeOptions opts;
  opts.samples = f.samples;
  opts.sigma = f.sigma;
  opts.lambda_ratio = f.lambda_ratio;
  opts.lambda = f.lambda;
  opts.seed = f.seed;
  opts.threads = f.threads;
  const Attribution a = lime_explain(class_scorer(m.net, f.model.class_index), in.image, sp, opts, f.fill);
  Json params{{"sigma", f.sigma}, {"lambda_ratio", f.lambda_ratio}};
  if (f.lambda) params["lambda"] = *f.lambda;
  write_attribution("lime", a, sp, in, m, f, params, out);
  return kExitOk;
}

int cmd_shap(const ExplainFlags& f, std::ostream& out) {
  const LoadedModel m = load_model(f.model);
  const LoadedImage in = load_image(f.image);
  const SuperpixelMap sp = slic_segment(in.image, f.slic.params());
  const Scorer scorer = class_scorer(m.net, f.model.class_index);
  Attribution a;
  if (f.exact) {
    a = exact_shapley(scorer, in.image, sp, f.fill, f.threads);
  } else {
    ShapOptions opts;
    opts.samples = f.samples;
    opts.seed = f.seed;
    opts.threads = f.threads;
    a = shap_explain(scorer, in.image, sp, opts, f.fill);
  }
  write_attribution("shap", a, sp, in, m, f, Json{{"exact", f.exact}}, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// selftest

struct SelftestFlags {
  std::uint64_t seed = 0;
  int trials = 20;
};

bool report(std::ostream& out, const std::string& name, double err, double tol) {
  const bool ok = err < tol;
  out << (ok ? "PASS " : "FAIL ") << name << " max_err " << err << " tol " << tol << "\n";
  return ok;
}

// Shapley values from the permutation definition.
Eigen::VectorXd permutation_shapley(int n, const CoalitionGame& game) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
  double count = 0;
  do {
    Mask m(static_cast<std::size_t>(n), 0);
    double prev = game(m);
    for (int i : order) {
      m[static_cast<std::size_t>(i)] = 1;
      const double cur = game(m);
      phi(i) += cur - prev;
      prev = cur;
    }
    count += 1;
  } while (std::next_permutation(order.begin(), order.end()));
  return phi / count;
}

CoalitionGame table_game(std::vector<double> table) {
  return [table = std::move(table)](const Mask& m) {
    std::size_t bits = 0;
    for (std::size_t i = 0; i < m.size(); ++i) bits |= static_cast<std::size_t>(m[i] != 0) << i;
    return table[bits];
  };
}

int cmd_selftest(const SelftestFlags& f, std::ostream& out) {
  Rng rng(f.seed);
  bool ok = true;

  double perm_err = 0, kernel_err = 0, eff_err = 0;
  for (int t = 0; t < f.trials; ++t) {
    const int n = 3 + static_cast<int>(rng.uniform_index(4));
    std::vector<double> table(std::size_t{1} << n);
    for (double& v : table) v = rng.normal();
    const CoalitionGame game = table_game(table);
    const Attribution exact = exact_shapley(game, n);
    perm_err = std::max(perm_err, (exact.weights - permutation_shapley(n, game)).cwiseAbs().maxCoeff());
    ShapOptions opts;
    opts.samples = 1 << n;
    const Attribution k = shap_explain(game, n, opts);
    kernel_err = std::max(kernel_err, (k.weights - exact.weights).cwiseAbs().maxCoeff());
    eff_err = std::max(eff_err, std::abs(k.intercept + k.weights.sum() - table.back()));
  }
  ok &= report(out, "exact-shapley vs permutation definition", perm_err, 1e-12);
  ok &= report(out, "kernel-shap enumeration vs exact-shapley", kernel_err, 1e-6);
  ok &= report(out, "kernel-shap efficiency", eff_err, 1e-6);

  const Attribution sym = exact_shapley([](const Mask& m) { return double(m[0] | m[1]) + 0.5 * m[2]; }, 4);
  ok &= report(out, "symmetry", std::abs(sym.weights(0) - sym.weights(1)), 1e-9);
  ok &= report(out, "dummy", std::abs(sym.weights(3)), 1e-9);
  const Attribution add = exact_shapley([](const Mask& m) { return 0.3 * m[0] - 1.2 * m[1] + 2.0 * m[2]; }, 3);
  ok &= report(out, "additivity", (add.weights - Eigen::Vector3d(0.3, -1.2, 2.0)).cwiseAbs().maxCoeff(), 1e-9);

  double fc_err = 0;
  for (int t = 0; t < f.trials; ++t) {
    const MicroNet net = net_init(derive_seed(f.seed, static_cast<std::uint64_t>(t)), Architecture::default_arch());
    RowMatrixXd px(32, 32);
    for (Index i = 0; i < px.size(); ++i) px.data()[i] = rng.uniform();
    const GrayImage img(px);
    fc_err = std::max(fc_err, (forward(net, img).scores - forward_fc_equivalent(net, img)).cwiseAbs().maxCoeff());
  }
  ok &= report(out, "1x1-conv head vs fully connected head", fc_err, 1e-9);
  out << (ok ? "selftest passed" : "selftest FAILED") << "\n";
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ctxai: class activation maps, noisy-OR slice integration, LIME and Kernel SHAP for CT slices"};
  app.name("ctxai");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  CorpusFlags corpus;
  auto* gen = app.add_subcommand("gen-corpus", "write a synthetic patient corpus");
  gen->add_option("--out", corpus.out, "output directory")->required();
  gen->add_option("--patients", corpus.patients, "number of patients")->check(CLI::Range(1, 100000));
  gen->add_option("--slices", corpus.slices, "slices per patient")->check(CLI::Range(1, 100000));
  gen->add_option("--size", corpus.size, "slice height and width")->check(CLI::Range(64, 4096));
  gen->add_option("--noise", corpus.noise, "Gaussian noise sigma")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--positive", corpus.positive, "fraction of positive patients")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--seed", corpus.seed, "corpus seed");

  SegmentFlags seg;
  auto* segment = app.add_subcommand("segment", "SLIC superpixels of one slice");
  segment->add_option("--image", seg.image, "input slice (PGM)")->required();
  segment->add_option("--out", seg.out, "output directory");
  add_slic_flags(segment, seg.slic);

  PatientFlags pat;
  auto* patient = app.add_subcommand("patient-score", "noisy-OR patient probability from a slice directory");
  patient->add_option("--slices", pat.slices, "directory of slice PGMs, ordered by filename")->required();
  patient->add_option("--ls", pat.ls, "slices per section")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  patient->add_option("--k", pat.k, "top-k slices pooled per section")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  patient->add_option("--label", pat.label, "ground-truth label for the BCE loss")->check(CLI::Range(0, 1));
  patient->add_flag("--json", pat.json, "print a JSON report instead of text");
  patient->add_option("--threads", pat.threads, "scorer threads (0 = all cores)");
  add_model_flags(patient, pat.model);

  CamFlags camf;
  auto* cam = app.add_subcommand("cam", "class activation heatmap and lesion boxes");
  cam->add_option("--image", camf.image, "input slice (PGM)")->required();
  cam->add_option("--out", camf.out, "output directory");
  cam->add_option("--threshold", camf.threshold, "box threshold as a fraction of the heatmap maximum")
      ->check(CLI::Range(0.0, 1.0));
  cam->add_option("--min-area", camf.min_area, "smallest box component in pixels")->check(CLI::PositiveNumber);
  add_model_flags(cam, camf.model);

  ExplainFlags limef;
  auto* lime = app.add_subcommand("lime", "LIME superpixel attribution");
  add_explain_flags(lime, limef);
  lime->add_option("--sigma", limef.sigma, "kernel width")->check(CLI::PositiveNumber);
  lime->add_option("--lambda-ratio", limef.lambda_ratio, "Lasso penalty as a fraction of lambda_max")
      ->check(CLI::NonNegativeNumber);
  lime->add_option("--lambda", limef.lambda, "absolute Lasso penalty (overrides --lambda-ratio)")
      ->check(CLI::NonNegativeNumber);

  ExplainFlags shapf;
  auto* shap = app.add_subcommand("shap", "Kernel SHAP superpixel attribution");
  add_explain_flags(shap, shapf);
  shap->add_flag("--exact", shapf.exact, "enumerate all coalitions (at most 20 superpixels)");

  SelftestFlags self;
  auto* selftest = app.add_subcommand("selftest", "run built-in oracle checks");
  selftest->add_option("--seed", self.seed, "seed for random games and nets");
  selftest->add_option("--trials", self.trials, "random cases per check")->check(CLI::Range(1, 10000));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_corpus(corpus, out);
    if (segment->parsed()) return cmd_segment(seg, out);
    if (patient->parsed()) return cmd_patient_score(pat, out);
    if (cam->parsed()) return cmd_cam(camf, out);
    if (lime->parsed()) return cmd_lime(limef, out);
    if (shap->parsed()) return cmd_shap(shapf, out);
    if (selftest->parsed()) return cmd_selftest(self, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ctxai::cli
