/*
 * Copyright 2026 The varl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "varl/emnist.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace varl {

std::optional<int> op_letter_index(char letter) {
  for (std::size_t i = 0; i < kOpLetters.size(); ++i) {
    if (kOpLetters[i] == letter) return static_cast<int>(i);
  }
  return std::nullopt;
}

GlyphSet GlyphSet::subset(std::span<const std::size_t> indices) const {
  GlyphSet out;
  out.kind = kind;
  out.source = source;
  out.pixels.reserve(indices.size() * kGlyphPixels);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto g = glyph(i);
    out.pixels.insert(out.pixels.end(), g.begin(), g.end());
    out.labels.push_back(labels.at(i));
    out.ids.push_back(ids.at(i));
  }
  return out;
}

void GlyphSet::number_from(std::uint64_t base) {
  ids.resize(labels.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = base + i;
}

// ---------------------------------------------------------------------------
// IDX

namespace {

struct GzFile {
  gzFile handle = nullptr;
  explicit GzFile(const std::filesystem::path& path, const char* mode)
      : handle(gzopen(path.string().c_str(), mode)) {}
  ~GzFile() {
    if (handle) gzclose(handle);
  }
  GzFile(const GzFile&) = delete;
  GzFile& operator=(const GzFile&) = delete;
};

// Reads up to `n` bytes; returns how many were read.
std::size_t read_bytes(GzFile& f, void* dst, std::size_t n) {
  std::size_t done = 0;
  auto* out = static_cast<unsigned char*>(dst);
  while (done < n) {
    const auto chunk = static_cast<unsigned>(std::min<std::size_t>(n - done, 1u << 30));
    const int got = gzread(f.handle, out + done, chunk);
    if (got < 0) throw IdxError("read error");
    if (got == 0) break;
    done += static_cast<std::size_t>(got);
  }
  return done;
}

std::uint32_t read_be32(GzFile& f, const std::filesystem::path& path) {
  unsigned char b[4];
  if (read_bytes(f, b, 4) != 4) {
    throw IdxTruncatedError("truncated IDX header in " + path.string());
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

void write_be32(GzFile& f, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  gzwrite(f.handle, b, 4);
}

GzFile open_for_read(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IdxError("no such file: " + path.string());
  }
  return GzFile(path, "rb");
}

const char* write_mode(const std::filesystem::path& path) {
  return path.extension() == ".gz" ? "wb9" : "wbT";
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
  GzFile f = open_for_read(path);
  if (!f.handle) throw IdxError("cannot open " + path.string());
  const auto magic = read_be32(f, path);
  if (magic != kIdxImagesMagic) {
    throw IdxMagicError("bad IDX image magic in " + path.string());
  }
  IdxImages images;
  images.count = read_be32(f, path);
  images.rows = read_be32(f, path);
  images.cols = read_be32(f, path);
  const std::size_t n = std::size_t{images.count} * images.rows * images.cols;
  images.pixels.resize(n);
  if (read_bytes(f, images.pixels.data(), n) != n) {
    throw IdxTruncatedError("IDX image payload shorter than header in " +
                            path.string());
  }
  return images;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  GzFile f = open_for_read(path);
  if (!f.handle) throw IdxError("cannot open " + path.string());
  const auto magic = read_be32(f, path);
  if (magic != kIdxLabelsMagic) {
    throw IdxMagicError("bad IDX label magic in " + path.string());
  }
  const auto count = read_be32(f, path);
  std::vector<std::uint8_t> labels(count);
  if (read_bytes(f, labels.data(), count) != count) {
    throw IdxTruncatedError("IDX label payload shorter than header in " +
                            path.string());
  }
  return labels;
}

GlyphSet load_idx(const std::filesystem::path& images_path,
                  const std::filesystem::path& labels_path,
                  const IdxLoadOptions& options) {
  const IdxImages images = read_idx_images(images_path);
  const auto labels = read_idx_labels(labels_path);
  if (images.count != labels.size()) {
    throw IdxCountMismatchError(std::to_string(images.count) + " images but " +
                                std::to_string(labels.size()) + " labels");
  }
  if (images.rows != kGlyphSide || images.cols != kGlyphSide) {
    throw IdxError("expected 28x28 glyphs, got " + std::to_string(images.rows) +
                   "x" + std::to_string(images.cols));
  }
  GlyphSet set;
  set.kind = options.kind;
  set.source = images_path.filename().string();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int label = labels[i];
    if (options.kind == GlyphKind::Digits) {
      if (label > 9) continue;
    } else {
      const int offset = label - options.letter_label_base;
      if (offset < 0 || offset >= 26) continue;
      const auto op = op_letter_index(static_cast<char>('A' + offset));
      if (!op) continue;
      label = *op;
    }
    const std::uint8_t* src = images.pixels.data() + i * kGlyphPixels;
    for (int y = 0; y < kGlyphSide; ++y) {
      for (int x = 0; x < kGlyphSide; ++x) {
        set.pixels.push_back(options.transpose ? src[x * kGlyphSide + y]
                                               : src[y * kGlyphSide + x]);
      }
    }
    set.labels.push_back(label);
  }
  set.number_from(0);
  return set;
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  GzFile f(path, write_mode(path));
  if (!f.handle) throw IdxError("cannot write " + path.string());
  write_be32(f, kIdxImagesMagic);
  write_be32(f, images.count);
  write_be32(f, images.rows);
  write_be32(f, images.cols);
  gzwrite(f.handle, images.pixels.data(), static_cast<unsigned>(images.pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path,
                      std::span<const std::uint8_t> labels) {
  GzFile f(path, write_mode(path));
  if (!f.handle) throw IdxError("cannot write " + path.string());
  write_be32(f, kIdxLabelsMagic);
  write_be32(f, static_cast<std::uint32_t>(labels.size()));
  gzwrite(f.handle, labels.data(), static_cast<unsigned>(labels.size()));
}

// ---------------------------------------------------------------------------
// Synthetic glyphs

namespace {

struct Point {
  double x, y;
};
using Stroke = std::vector<Point>;

// Arc of the circle/ellipse centred at (cx, cy), angles in degrees with 90 at
// the top (y grows downwards), walked from `from` to `to`.
Stroke arc(double cx, double cy, double rx, double ry, double from, double to,
           int segments = 16) {
  Stroke s;
  for (int i = 0; i <= segments; ++i) {
    const double a = (from + (to - from) * i / segments) * std::numbers::pi / 180.0;
    s.push_back({cx + rx * std::cos(a), cy - ry * std::sin(a)});
  }
  return s;
}

Stroke join(Stroke a, const Stroke& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Skeletons in a unit box, x right, y down.
std::vector<Stroke> skeleton(char symbol) {
  switch (symbol) {
    case '0':
      return {arc(0.5, 0.5, 0.3, 0.45, 0, 360, 24)};
    case '1':
      return {{{0.32, 0.22}, {0.52, 0.05}, {0.52, 0.95}}};
    case '2':
      return {join(arc(0.5, 0.3, 0.27, 0.25, 160, -35),
                   Stroke{{0.18, 0.95}, {0.85, 0.95}})};
    case '3':
      return {join(arc(0.5, 0.28, 0.24, 0.22, 150, -90),
                   arc(0.5, 0.72, 0.27, 0.23, 90, -150))};
    case '4':
      return {{{0.65, 0.95}, {0.65, 0.05}, {0.13, 0.66}, {0.88, 0.66}}};
    case '5':
      return {join(Stroke{{0.8, 0.05}, {0.3, 0.05}, {0.26, 0.45}},
                   arc(0.5, 0.68, 0.28, 0.27, 135, -145))};
    case '6':
      return {{{0.72, 0.06}, {0.45, 0.22}, {0.28, 0.5}, {0.24, 0.72}},
              arc(0.5, 0.71, 0.26, 0.24, 0, 360, 20)};
    case '7':
      return {{{0.14, 0.05}, {0.86, 0.05}, {0.42, 0.95}}};
    case '8':
      return {arc(0.5, 0.27, 0.21, 0.21, 0, 360, 20),
              arc(0.5, 0.72, 0.26, 0.23, 0, 360, 20)};
    case '9':
      return {arc(0.5, 0.3, 0.25, 0.24, 0, 360, 20),
              {{0.75, 0.32}, {0.7, 0.6}, {0.6, 0.95}}};
    case 'A':
      return {{{0.1, 0.95}, {0.5, 0.05}, {0.9, 0.95}}, {{0.28, 0.62}, {0.72, 0.62}}};
    case 'M':
      return {{{0.1, 0.95}, {0.15, 0.05}, {0.5, 0.62}, {0.85, 0.05}, {0.9, 0.95}}};
    case 'X':
      return {{{0.15, 0.05}, {0.85, 0.95}}, {{0.85, 0.05}, {0.15, 0.95}}};
    case 'N':
      return {{{0.15, 0.95}, {0.15, 0.05}, {0.85, 0.95}, {0.85, 0.05}}};
    default:
      throw std::invalid_argument(std::string("no glyph skeleton for '") + symbol + "'");
  }
}

double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y;
  return std::sqrt(ex * ex + ey * ey);
}

}  // namespace

std::array<std::uint8_t, kGlyphPixels> render_glyph(char symbol, Rng& rng) {
  auto strokes = skeleton(symbol);

  // Affine map from the unit box to pixel space, about the glyph centre.
  const double angle = rng.uniform(-14.0, 14.0) * std::numbers::pi / 180.0;
  const double sx = 19.0 * rng.uniform(0.8, 1.05);
  const double sy = 20.0 * rng.uniform(0.85, 1.05);
  const double shear = rng.uniform(-0.25, 0.25);
  const double tx = 14.0 + rng.uniform(-1.5, 1.5);
  const double ty = 14.0 + rng.uniform(-1.5, 1.5);
  const double ca = std::cos(angle), sa = std::sin(angle);
  const double jitter = 0.035;

  for (auto& stroke : strokes) {
    for (auto& p : stroke) {
      const double ux = (p.x - 0.5 + rng.uniform(-jitter, jitter)) * sx;
      const double uy = (p.y - 0.5 + rng.uniform(-jitter, jitter)) * sy;
      const double shx = ux + shear * uy;
      p = {tx + ca * shx - sa * uy, ty + sa * shx + ca * uy};
    }
  }

  const double radius = rng.uniform(0.9, 2.0);
  const double peak = rng.uniform(200.0, 255.0);
  std::array<std::uint8_t, kGlyphPixels> out{};
  for (int y = 0; y < kGlyphSide; ++y) {
    for (int x = 0; x < kGlyphSide; ++x) {
      const Point c{x + 0.5, y + 0.5};
      double d = 1e9;
      for (const auto& stroke : strokes) {
        for (std::size_t i = 0; i + 1 < stroke.size(); ++i) {
          d = std::min(d, segment_distance(c, stroke[i], stroke[i + 1]));
        }
      }
      double v = std::clamp(radius + 0.5 - d, 0.0, 1.0) * peak;
      if (v > 0.0) v += rng.uniform(-18.0, 18.0);
      if (rng.uniform() < 0.015) v = std::max(v, rng.uniform(30.0, 90.0));
      out[static_cast<std::size_t>(y * kGlyphSide + x)] =
          static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

GlyphSet synthetic_glyphs(GlyphKind kind, std::size_t count, std::uint64_t seed,
                          std::uint64_t id_base) {
  GlyphSet set;
  set.kind = kind;
  set.source = "synthetic";
  set.pixels.reserve(count * kGlyphPixels);
  set.labels.reserve(count);
  Rng rng(seed);
  const int classes = kind == GlyphKind::Digits ? 10 : 4;
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    const char symbol = kind == GlyphKind::Digits
                            ? static_cast<char>('0' + label)
                            : kOpLetters[static_cast<std::size_t>(label)];
    const auto g = render_glyph(symbol, rng);
    set.pixels.insert(set.pixels.end(), g.begin(), g.end());
    set.labels.push_back(label);
  }
  set.number_from(id_base);
  return set;
}

GlyphPools synthetic_pools(std::uint64_t seed, const SyntheticPoolSizes& sizes) {
  // Disjoint id ranges per split and kind.
  constexpr std::uint64_t kBlock = std::uint64_t{1} << 32;
  GlyphPools pools;
  pools.train_digits = synthetic_glyphs(GlyphKind::Digits, sizes.train_digits,
                                        derive_seed(seed, 1), 0 * kBlock);
  pools.train_letters = synthetic_glyphs(GlyphKind::Letters, sizes.train_letters,
                                         derive_seed(seed, 2), 1 * kBlock);
  pools.test_digits = synthetic_glyphs(GlyphKind::Digits, sizes.test_digits,
                                       derive_seed(seed, 3), 2 * kBlock);
  pools.test_letters = synthetic_glyphs(GlyphKind::Letters, sizes.test_letters,
                                        derive_seed(seed, 4), 3 * kBlock);
  pools.synthetic = true;
  pools.source = "synthetic";
  return pools;
}

namespace {

std::optional<std::filesystem::path> find_file(const std::filesystem::path& dir,
                                               const std::string& stem) {
  for (const auto* suffix : {"", ".gz"}) {
    auto p = dir / (stem + suffix);
    if (std::filesystem::exists(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

GlyphPools load_glyph_pools(const std::optional<std::filesystem::path>& data_dir,
                            std::uint64_t seed, const SyntheticPoolSizes& sizes) {
  if (data_dir) {
    const auto& dir = *data_dir;
    const auto tr_di = find_file(dir, "emnist-digits-train-images-idx3-ubyte");
    const auto tr_dl = find_file(dir, "emnist-digits-train-labels-idx1-ubyte");
    const auto te_di = find_file(dir, "emnist-digits-test-images-idx3-ubyte");
    const auto te_dl = find_file(dir, "emnist-digits-test-labels-idx1-ubyte");
    const auto tr_li = find_file(dir, "emnist-letters-train-images-idx3-ubyte");
    const auto tr_ll = find_file(dir, "emnist-letters-train-labels-idx1-ubyte");
    const auto te_li = find_file(dir, "emnist-letters-test-images-idx3-ubyte");
    const auto te_ll = find_file(dir, "emnist-letters-test-labels-idx1-ubyte");
    if (tr_di && tr_dl && te_di && te_dl && tr_li && tr_ll && te_li && te_ll) {
      constexpr std::uint64_t kBlock = std::uint64_t{1} << 32;
      IdxLoadOptions digits{GlyphKind::Digits, true, 1};
      IdxLoadOptions letters{GlyphKind::Letters, true, 1};
      GlyphPools pools;
      pools.train_digits = load_idx(*tr_di, *tr_dl, digits);
      pools.train_letters = load_idx(*tr_li, *tr_ll, letters);
      pools.test_digits = load_idx(*te_di, *te_dl, digits);
      pools.test_letters = load_idx(*te_li, *te_ll, letters);
      pools.train_digits.number_from(0 * kBlock);
      pools.train_letters.number_from(1 * kBlock);
      pools.test_digits.number_from(2 * kBlock);
      pools.test_letters.number_from(3 * kBlock);
      pools.synthetic = false;
      pools.source = tr_di->filename().string() + "," + tr_li->filename().string();
      return pools;
    }
  }
  return synthetic_pools(seed, sizes);
}

}  // namespace varl
