// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include "colora/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "colora/autograd.hpp"
#include "colora/error.hpp"
#include "colora/rng.hpp"

namespace fs = std::filesystem;

namespace colora {

namespace {

constexpr char kMagic[4] = {'C', 'O', 'T', '1'};
constexpr uint8_t kDtypeF32 = 0;
constexpr uint8_t kDtypeU8 = 1;
constexpr uint8_t kDtypeI64 = 2;

struct RawArray {
  uint8_t dtype = 0;
  std::vector<int> dims;
  std::string payload;
};

size_t dtype_size(uint8_t dtype) {
  switch (dtype) {
    case kDtypeF32:
      return 4;
    case kDtypeU8:
      return 1;
    case kDtypeI64:
      return 8;
    default:
      throw IoError("cot1: unknown dtype code " + std::to_string(dtype));
  }
}

RawArray read_cot1(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();

  size_t pos = 0;
  auto need = [&](size_t n) {
    if (pos + n > buf.size()) throw IoError("cot1 truncated: " + path.string());
  };
  need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0) throw IoError("cot1 magic mismatch: " + path.string());
  pos = 4;

  RawArray a;
  need(2);
  a.dtype = static_cast<uint8_t>(buf[pos++]);
  const uint8_t ndim = static_cast<uint8_t>(buf[pos++]);
  size_t n = 1;
  for (uint8_t i = 0; i < ndim; ++i) {
    need(4);
    uint32_t d = 0;
    for (int b = 0; b < 4; ++b) d |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + b])) << (8 * b);
    pos += 4;
    if (d == 0 || d > (1u << 28)) throw IoError("cot1 bad dimension: " + path.string());
    a.dims.push_back(static_cast<int>(d));
    n *= d;
  }
  const size_t bytes = n * dtype_size(a.dtype);
  need(bytes);
  a.payload = buf.substr(pos, bytes);
  pos += bytes;
  if (pos != buf.size()) throw IoError("cot1 trailing bytes: " + path.string());
  return a;
}

void write_cot1(const fs::path& path, uint8_t dtype, const std::vector<int>& dims,
                const std::string& payload) {
  std::string out(kMagic, 4);
  out.push_back(static_cast<char>(dtype));
  out.push_back(static_cast<char>(dims.size()));
  for (int d : dims) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((static_cast<uint32_t>(d) >> (8 * b)) & 0xff));
  }
  out += payload;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write: " + path.string());
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

SplitData load_split(const fs::path& dir, const std::string& split, int expected_classes) {
  RawArray images = read_cot1(dir / (split + "_images.cot1"));
  RawArray labels = read_cot1(dir / (split + "_labels.cot1"));

  if (images.dtype != kDtypeU8 || images.dims.size() != 4) {
    throw IoError(split + "_images.cot1 must be a u8 (N, H, W, C) tensor");
  }
  if (labels.dtype != kDtypeI64 || labels.dims.size() != 1) {
    throw IoError(split + "_labels.cot1 must be an i64 (N) tensor");
  }
  const int n = images.dims[0];
  if (labels.dims[0] != n) {
    throw IoError(split + ": image count " + std::to_string(n) + " vs label count " +
                  std::to_string(labels.dims[0]));
  }

  SplitData out;
  std::vector<float> pixels(images.payload.size());
  for (size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<float>(static_cast<uint8_t>(images.payload[i])) / 255.0f;
  }
  out.images = Tensor::from_data_unchecked(images.dims, std::move(pixels));

  out.labels.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    int64_t v = 0;
    for (int b = 0; b < 8; ++b) {
      v |= static_cast<int64_t>(static_cast<uint8_t>(labels.payload[static_cast<size_t>(i) * 8 + b]))
           << (8 * b);
    }
    if (v < 0 || (expected_classes > 0 && v >= expected_classes)) {
      throw IoError(split + ": label " + std::to_string(v) + " out of range");
    }
    out.labels[static_cast<size_t>(i)] = static_cast<int>(v);
  }

  std::ifstream mf(dir / (split + "_manifest.txt"));
  if (!mf) throw IoError("missing file: " + (dir / (split + "_manifest.txt")).string());
  std::string line;
  while (std::getline(mf, line)) {
    if (!line.empty()) out.ids.push_back(line);
  }
  if (out.ids.size() != static_cast<size_t>(n)) {
    throw IoError(split + ": manifest has " + std::to_string(out.ids.size()) + " ids for " +
                  std::to_string(n) + " samples");
  }
  std::set<std::string> uniq(out.ids.begin(), out.ids.end());
  if (uniq.size() != out.ids.size()) throw IoError(split + ": duplicate sample ids");
  return out;
}

void save_split(const fs::path& dir, const std::string& split, const SplitData& s) {
  if (s.images.rank() != 4) throw ShapeError("split images must be (N, H, W, C)");
  if (static_cast<size_t>(s.count()) != s.labels.size() ||
      static_cast<size_t>(s.count()) != s.ids.size()) {
    throw ShapeError("split arrays disagree on sample count");
  }
  std::string pixels(s.images.size(), '\0');
  for (size_t i = 0; i < s.images.size(); ++i) {
    const float v = s.images[i];
    if (v < 0.0f || v > 1.0f) throw ValueError("pixel outside [0, 1]");
    pixels[i] = static_cast<char>(static_cast<uint8_t>(std::lround(v * 255.0f)));
  }
  write_cot1(dir / (split + "_images.cot1"), kDtypeU8, s.images.shape(), pixels);

  std::string labels(s.labels.size() * 8, '\0');
  for (size_t i = 0; i < s.labels.size(); ++i) {
    const int64_t v = s.labels[i];
    for (int b = 0; b < 8; ++b) {
      labels[i * 8 + static_cast<size_t>(b)] = static_cast<char>((static_cast<uint64_t>(v) >> (8 * b)) & 0xff);
    }
  }
  write_cot1(dir / (split + "_labels.cot1"), kDtypeI64, {s.count()}, labels);

  std::ofstream mf(dir / (split + "_manifest.txt"), std::ios::trunc);
  if (!mf) throw IoError("cannot write manifest for " + split);
  for (const std::string& id : s.ids) mf << id << '\n';
}

SplitData gather(const SplitData& s, const std::vector<size_t>& rows) {
  SplitData out;
  out.images = take_rows(s.images, rows);
  out.labels.reserve(rows.size());
  out.ids.reserve(rows.size());
  for (size_t r : rows) {
    out.labels.push_back(s.labels[r]);
    out.ids.push_back(s.ids[r]);
  }
  return out;
}

}  // namespace

DatasetSplits load_dataset(const std::string& dir, int expected_classes) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw IoError("dataset directory not found: " + dir);
  DatasetSplits out;
  out.train = load_split(root, "train", expected_classes);
  out.val = load_split(root, "val", expected_classes);
  out.test = load_split(root, "test", expected_classes);
  int k = expected_classes;
  if (k == 0) {
    for (const SplitData* s : {&out.train, &out.val, &out.test}) {
      for (int l : s->labels) k = std::max(k, l + 1);
    }
  }
  out.num_classes = k;
  return out;
}

void save_dataset(const DatasetSplits& splits, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root);
  save_split(root, "train", splits.train);
  save_split(root, "val", splits.val);
  save_split(root, "test", splits.test);
}

std::vector<int> class_counts(const SplitData& split) {
  std::vector<int> counts;
  for (int l : split.labels) {
    if (l >= static_cast<int>(counts.size())) counts.resize(static_cast<size_t>(l) + 1, 0);
    counts[static_cast<size_t>(l)] += 1;
  }
  return counts;
}

SplitData balance_by_first_n(const SplitData& split, int n_per_class) {
  if (n_per_class < 1) throw ValueError("n_per_class must be >= 1");
  std::map<int, std::vector<size_t>> by_class;
  for (size_t i = 0; i < split.labels.size(); ++i) by_class[split.labels[i]].push_back(i);

  std::vector<size_t> keep;
  for (auto& [cls, rows] : by_class) {
    if (static_cast<int>(rows.size()) < n_per_class) {
      throw ValueError("class " + std::to_string(cls) + " has " + std::to_string(rows.size()) +
                       " samples, need " + std::to_string(n_per_class));
    }
    std::sort(rows.begin(), rows.end(),
              [&](size_t a, size_t b) { return split.ids[a] < split.ids[b]; });
    keep.insert(keep.end(), rows.begin(), rows.begin() + n_per_class);
  }
  std::sort(keep.begin(), keep.end(),
            [&](size_t a, size_t b) { return split.ids[a] < split.ids[b]; });
  return gather(split, keep);
}

SplitData balance_by_first_n_min(const SplitData& split) {
  const std::vector<int> counts = class_counts(split);
  int mn = 0;
  for (int c : counts) {
    if (c > 0) mn = mn == 0 ? c : std::min(mn, c);
  }
  if (mn == 0) throw ValueError("balance: split has no samples");
  return balance_by_first_n(split, mn);
}

Tensor predictive_entropy(const Tensor& probs) {
  if (probs.rank() != 2) throw ShapeError("predictive_entropy expects (N, K)");
  const int n = probs.dim(0), k = probs.dim(1);
  Tensor out = Tensor::zeros({n});
  for (int i = 0; i < n; ++i) {
    const float* row = probs.raw() + static_cast<size_t>(i) * k;
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
      if (row[j] < 0.0f) throw ValueError("predictive_entropy: negative probability");
      total += row[j];
    }
    if (std::abs(total - 1.0) > 1e-5) {
      throw ValueError("predictive_entropy: row does not sum to 1 (sum=" + std::to_string(total) +
                       ")");
    }
    double h = 0.0;
    for (int j = 0; j < k; ++j) {
      const double p = row[j] / total;
      if (p > 0.0) h -= p * std::log(p);
    }
    out[static_cast<size_t>(i)] = static_cast<float>(h);
  }
  return out;
}

Tensor take_rows(const Tensor& images, const std::vector<size_t>& rows) {
  if (images.rank() < 1) throw ShapeError("take_rows expects rank >= 1");
  const size_t stride = images.size() / static_cast<size_t>(images.dim(0));
  std::vector<int> shape = images.shape();
  shape[0] = static_cast<int>(rows.size());
  std::vector<float> out(rows.size() * stride);
  for (size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(images.raw() + rows[r] * stride, stride, out.data() + r * stride);
  }
  return Tensor::from_data_unchecked(std::move(shape), std::move(out));
}

std::pair<SplitData, DistillReport> distill(const SplitData& split, const ModelGraph& model,
                                            int discard_top, int keep, int batch_size) {
  // Model probabilities for every sample, in batches.
  const int n = split.count();
  std::vector<float> entropy(static_cast<size_t>(n));
  for (int start = 0; start < n; start += batch_size) {
    const int stop = std::min(n, start + batch_size);
    std::vector<size_t> rows(static_cast<size_t>(stop - start));
    std::iota(rows.begin(), rows.end(), static_cast<size_t>(start));
    const Tensor logits = model.forward(take_rows(split.images, rows));
    const Tensor ent = predictive_entropy(softmax_rows(logits));
    for (int i = start; i < stop; ++i) entropy[static_cast<size_t>(i)] = ent[static_cast<size_t>(i - start)];
  }
  return distill_by_entropy(split, entropy, discard_top, keep);
}

std::pair<SplitData, DistillReport> distill_by_entropy(const SplitData& split,
                                                       std::span<const float> entropy,
                                                       int discard_top, int keep) {
  if (discard_top < 0 || keep < 1) throw ValueError("distill: bad discard/keep arguments");
  if (entropy.size() != split.labels.size()) {
    throw ShapeError("distill: entropy count does not match split size");
  }

  std::map<int, std::vector<size_t>> by_class;
  for (size_t i = 0; i < split.labels.size(); ++i) by_class[split.labels[i]].push_back(i);

  std::string shortfalls;
  for (const auto& [cls, rows] : by_class) {
    if (static_cast<int>(rows.size()) < discard_top + keep) {
      shortfalls += " class " + std::to_string(cls) + ": have " + std::to_string(rows.size()) +
                    ", need " + std::to_string(discard_top + keep);
    }
  }
  if (!shortfalls.empty()) throw ValueError("distill: insufficient samples:" + shortfalls);

  DistillReport report;
  std::vector<size_t> keep_rows;
  for (auto& [cls, rows] : by_class) {
    std::sort(rows.begin(), rows.end(), [&](size_t a, size_t b) {
      if (entropy[a] != entropy[b]) return entropy[a] > entropy[b];
      return split.ids[a] < split.ids[b];
    });
    DistillClassReport cr;
    cr.class_id = cls;
    cr.sorted_entropies.reserve(rows.size());
    for (size_t r : rows) cr.sorted_entropies.push_back(entropy[r]);
    for (int i = 0; i < discard_top; ++i) cr.discarded.push_back(split.ids[rows[static_cast<size_t>(i)]]);
    for (int i = discard_top; i < discard_top + keep; ++i) {
      cr.retained.push_back(split.ids[rows[static_cast<size_t>(i)]]);
      keep_rows.push_back(rows[static_cast<size_t>(i)]);
    }
    report.classes.push_back(std::move(cr));
  }
  std::sort(keep_rows.begin(), keep_rows.end(),
            [&](size_t a, size_t b) { return split.ids[a] < split.ids[b]; });
  return {gather(split, keep_rows), std::move(report)};
}

namespace {

float quantize(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<float>(std::lround(c * 255.0) / 255.0);
}

void render_shapes4(std::vector<float>& img, int h, int w, int cls, Rng& rng, double noise,
                    double shift) {
  const int phase = static_cast<int>(rng.uniform_index(4));
  const int cx = w / 2 + static_cast<int>(rng.uniform_index(3)) - 1;
  const int cy = h / 2 + static_cast<int>(rng.uniform_index(3)) - 1;
  const double r = std::min(h, w) / 4.0 + rng.uniform(-0.5, 0.5);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double v = 0.15;
      switch (cls) {
        case 0:
          v = ((i + phase) / 2) % 2 == 0 ? 0.85 : 0.15;
          break;
        case 1:
          v = ((j + phase) / 2) % 2 == 0 ? 0.85 : 0.15;
          break;
        case 2: {
          const double d = std::hypot(i - cy, j - cx);
          v = d <= r ? 0.85 : 0.15;
          break;
        }
        case 3:
          v = (((i + phase) / 4) + ((j + phase) / 4)) % 2 == 0 ? 0.85 : 0.15;
          break;
        default:
          break;
      }
      v += rng.uniform(-noise, noise);
      v = (1.0 - shift) * v + shift * (1.0 - v);
      img[static_cast<size_t>(i) * w + j] = quantize(v);
    }
  }
}

void render_blobs2(std::vector<float>& img, int h, int w, int cls, Rng& rng, double noise,
                   double shift) {
  const double sigma = std::min(h, w) / 6.0;
  const double cy = h / 2.0 + rng.uniform(-1.5, 1.5);
  const double cx = (cls == 0 ? w / 4.0 : 3.0 * w / 4.0) + rng.uniform(-1.5, 1.5);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double d2 = (i - cy) * (i - cy) + (j - cx) * (j - cx);
      double v = 0.1 + 0.8 * std::exp(-d2 / (2.0 * sigma * sigma));
      v += rng.uniform(-noise, noise);
      v = (1.0 - shift) * v + shift * (1.0 - v);
      img[static_cast<size_t>(i) * w + j] = quantize(v);
    }
  }
}

SplitData synth_split(const SyntheticSpec& spec, const std::string& split, int per_class,
                      int classes, uint64_t seed) {
  const int h = spec.height, w = spec.width;
  const int n = per_class * classes;
  std::vector<float> images(static_cast<size_t>(n) * h * w);
  SplitData out;
  out.labels.reserve(static_cast<size_t>(n));
  out.ids.reserve(static_cast<size_t>(n));

  int row = 0;
  for (int cls = 0; cls < classes; ++cls) {
    for (int s = 0; s < per_class; ++s, ++row) {
      Rng rng(derive_seed(seed, split, static_cast<uint64_t>(cls), static_cast<uint64_t>(s)));
      std::vector<float> img(static_cast<size_t>(h) * w);
      if (spec.kind == "blobs2") {
        render_blobs2(img, h, w, cls, rng, spec.noise, spec.shift);
      } else {
        render_shapes4(img, h, w, cls, rng, spec.noise, spec.shift);
      }
      std::copy(img.begin(), img.end(), images.begin() + static_cast<size_t>(row) * h * w);
      out.labels.push_back(cls);
      char id[32];
      std::snprintf(id, sizeof(id), "c%d_s%05d", cls, s);
      out.ids.push_back(id);
    }
  }
  out.images = Tensor::from_data_unchecked({n, h, w, 1}, std::move(images));
  return out;
}

}  // namespace

DatasetSplits make_synthetic(const SyntheticSpec& spec) {
  int classes = 4;
  if (spec.kind == "blobs2") {
    classes = 2;
  } else if (spec.kind != "shapes4") {
    throw ValueError("unknown synthetic dataset kind: " + spec.kind);
  }
  if (spec.train_per_class < 1 || spec.val_per_class < 1 || spec.test_per_class < 1) {
    throw ValueError("synthetic per-class counts must be >= 1");
  }
  DatasetSplits out;
  out.num_classes = classes;
  out.train = synth_split(spec, "train", spec.train_per_class, classes, spec.seed);
  out.val = synth_split(spec, "val", spec.val_per_class, classes, spec.seed + 1);
  out.test = synth_split(spec, "test", spec.test_per_class, classes, spec.seed + 2);
  return out;
}

}  // namespace colora
