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

#include "doctest.h"
#include "temp_dir.hpp"

#include "varl/emnist.hpp"
#include "varl/scene.hpp"

#include <algorithm>
#include <numeric>
#include <map>
#include <set>

using namespace varl;
using varl::testing::TempDir;

namespace {

IdxImages tiny_images(std::uint32_t count, std::uint8_t seed) {
  IdxImages im{count, 28, 28, {}};
  im.pixels.resize(std::size_t{count} * kGlyphPixels);
  for (std::size_t i = 0; i < im.pixels.size(); ++i) {
    im.pixels[i] = static_cast<std::uint8_t>((i * 31 + seed) & 0xff);
  }
  return im;
}

const GlyphPools& small_pools() {
  static const GlyphPools pools =
      synthetic_pools(11, SyntheticPoolSizes{600, 200, 400, 100});
  return pools;
}

}  // namespace

TEST_CASE("idx: image round trip, plain and gzip") {
  TempDir dir;
  const auto im = tiny_images(5, 3);
  for (const char* name : {"a-idx3-ubyte", "a-idx3-ubyte.gz"}) {
    write_idx_images(dir / name, im);
    const auto back = read_idx_images(dir / name);
    CHECK(back.count == 5);
    CHECK(back.rows == 28);
    CHECK(back.cols == 28);
    CHECK(back.pixels == im.pixels);
  }
}

TEST_CASE("idx: header bytes 00 00 08 03 accepted, 00 00 08 01 rejected for images") {
  TempDir dir;
  write_idx_images(dir / "img", tiny_images(2, 0));
  std::string bytes = varl::testing::read_file(dir / "img");
  CHECK(static_cast<unsigned char>(bytes[2]) == 0x08);
  CHECK(static_cast<unsigned char>(bytes[3]) == 0x03);
  CHECK_NOTHROW(read_idx_images(dir / "img"));

  bytes[3] = 0x01;
  varl::testing::write_file(dir / "bad", bytes);
  CHECK_THROWS_AS(read_idx_images(dir / "bad"), IdxMagicError);

  const std::vector<std::uint8_t> labels{1, 2};
  write_idx_labels(dir / "lab", labels);
  CHECK_THROWS_AS(read_idx_images(dir / "lab"), IdxMagicError);
  CHECK_THROWS_AS(read_idx_labels(dir / "img"), IdxMagicError);
}

TEST_CASE("idx: short payload is a truncation error") {
  TempDir dir;
  write_idx_images(dir / "img", tiny_images(4, 0));
  std::string bytes = varl::testing::read_file(dir / "img");
  bytes.resize(bytes.size() - 100);
  varl::testing::write_file(dir / "short", bytes);
  CHECK_THROWS_AS(read_idx_images(dir / "short"), IdxTruncatedError);

  varl::testing::write_file(dir / "header-only", bytes.substr(0, 6));
  CHECK_THROWS_AS(read_idx_images(dir / "header-only"), IdxTruncatedError);
}

TEST_CASE("idx: image/label count mismatch is its own error") {
  TempDir dir;
  write_idx_images(dir / "img", tiny_images(3, 0));
  const std::vector<std::uint8_t> labels{1, 2};
  write_idx_labels(dir / "lab", labels);
  CHECK_THROWS_AS(load_idx(dir / "img", dir / "lab"), IdxCountMismatchError);
}

TEST_CASE("idx: MNIST-sized test file gives 10000 images of 784 bytes") {
  TempDir dir;
  const auto im = tiny_images(10000, 7);
  std::vector<std::uint8_t> labels(10000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint8_t>(i % 10);
  write_idx_images(dir / "t10k-images-idx3-ubyte", im);
  write_idx_labels(dir / "t10k-labels-idx1-ubyte", labels);

  // Byte-count oracle: 16-byte header plus one byte per pixel.
  CHECK(std::filesystem::file_size(dir / "t10k-images-idx3-ubyte") == 16 + 10000 * 784);
  CHECK(std::filesystem::file_size(dir / "t10k-labels-idx1-ubyte") == 8 + 10000);

  const auto set = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
  CHECK(set.size() == 10000);
  CHECK(set.pixels.size() == 10000u * 784u);
  CHECK(set.glyph(9999).size() == 784);
  CHECK(set.source == "t10k-images-idx3-ubyte");
}

TEST_CASE("idx: letters keep only A, M, X, N and transpose is applied") {
  TempDir dir;
  IdxImages im = tiny_images(26, 0);
  im.pixels[1] = 200;  // glyph 0, row 0, col 1
  std::vector<std::uint8_t> labels(26);
  std::iota(labels.begin(), labels.end(), 1);  // 'A'..'Z' with base 1
  write_idx_images(dir / "img", im);
  write_idx_labels(dir / "lab", labels);

  const auto set = load_idx(dir / "img", dir / "lab", {GlyphKind::Letters, true, 1});
  REQUIRE(set.size() == 4);
  CHECK(set.labels == std::vector<int>{0, 1, 3, 2});  // file order A, M, N, X
  CHECK(set.glyph(0)[28] == 200);  // now row 1, col 0
  for (int l : set.labels) CHECK(l < 4);
}

TEST_CASE("idx: digit labels above 9 are dropped") {
  TempDir dir;
  write_idx_images(dir / "img", tiny_images(3, 0));
  const std::vector<std::uint8_t> labels{3, 12, 9};
  write_idx_labels(dir / "lab", labels);
  const auto set = load_idx(dir / "img", dir / "lab");
  CHECK(set.labels == std::vector<int>{3, 9});
  CHECK(set.labels.size() == set.ids.size());
}

TEST_CASE("task_answer: worked examples") {
  const std::vector<int> a{6, 7}, b{2, 3, 4}, c{5, 2};
  CHECK(task_answer(TaskKind::Sum, a) == 13);
  CHECK(task_answer(TaskKind::Prod, b) == 24);
  CHECK(task_answer(TaskKind::Combined, c, op_letter_index('N')) == 2);
  CHECK(task_answer(TaskKind::Combined, c, op_letter_index('A')) == 7);
  CHECK(task_answer(TaskKind::Combined, c, op_letter_index('M')) == 10);
  CHECK(task_answer(TaskKind::Combined, c, op_letter_index('X')) == 5);
}

TEST_CASE("task_answer: argument errors") {
  const std::vector<int> none, four{1, 2, 3, 4}, two{1, 2};
  CHECK_THROWS_AS(task_answer(TaskKind::Sum, none), TaskArgumentError);
  CHECK_THROWS_AS(task_answer(TaskKind::Sum, four), TaskArgumentError);
  CHECK_THROWS_AS(task_answer(TaskKind::Combined, two), TaskArgumentError);
  CHECK_THROWS_AS(task_answer(TaskKind::Max, two, 0), TaskArgumentError);
  CHECK_THROWS_AS(parse_task("div"), UnknownTaskError);
  CHECK(parse_task("Sum") == TaskKind::Sum);
  CHECK(parse_task("combined") == TaskKind::Combined);
}

TEST_CASE("class_of: boundaries") {
  CHECK(class_of(0) == 0);
  CHECK(class_of(99) == 99);
  CHECK(class_of(100) == 100);
  CHECK(class_of(135) == 100);
  CHECK(class_of(729) == 100);
  CHECK_THROWS_AS(class_of(-1), TaskArgumentError);
}

TEST_CASE("task_answer: brute-force ranges over all digit tuples of length 2 and 3") {
  struct Range {
    int lo = 1 << 30, hi = -1;
  };
  std::map<TaskKind, Range> seen;
  for (TaskKind t : {TaskKind::Sum, TaskKind::Prod, TaskKind::Max, TaskKind::Min}) {
    for (int len = 2; len <= 3; ++len) {
      const int total = len == 2 ? 100 : 1000;
      for (int code = 0; code < total; ++code) {
        std::vector<int> d;
        for (int k = 0, c = code; k < len; ++k, c /= 10) d.push_back(c % 10);
        int expect = d[0];
        for (std::size_t i = 1; i < d.size(); ++i) {
          if (t == TaskKind::Sum) expect += d[i];
          if (t == TaskKind::Prod) expect *= d[i];
          if (t == TaskKind::Max) expect = std::max(expect, d[i]);
          if (t == TaskKind::Min) expect = std::min(expect, d[i]);
        }
        const int got = task_answer(t, d);
        REQUIRE(got == expect);
        seen[t].lo = std::min(seen[t].lo, got);
        seen[t].hi = std::max(seen[t].hi, got);
      }
    }
  }
  CHECK(seen[TaskKind::Sum].lo == 0);
  CHECK(seen[TaskKind::Sum].hi == 27);
  CHECK(seen[TaskKind::Prod].hi == 729);
  CHECK(seen[TaskKind::Max].hi == 9);
  CHECK(seen[TaskKind::Min].lo == 0);
  CHECK(seen[TaskKind::Min].hi == 9);
}

TEST_CASE("compose_scene: counting and consistency") {
  const auto& pools = small_pools();
  Rng rng(5);
  int three = 0, two = 0;
  for (int i = 0; i < 200; ++i) {
    const auto ex = compose_scene(rng, pools.train_digits, &pools.train_letters,
                                  TaskKind::Sum);
    const int occupied = std::accumulate(ex.occupancy.begin(), ex.occupancy.end(), 0);
    CHECK(occupied == static_cast<int>(ex.digits.size()));
    CHECK(ex.digits.size() >= 2);
    CHECK(ex.digits.size() <= 3);
    CHECK(!ex.op_letter);
    CHECK(ex.answer == task_answer(ex.task, ex.digits));
    CHECK(ex.class_index == class_of(ex.answer));
    (ex.digits.size() == 3 ? three : two)++;
  }
  CHECK(three > 50);
  CHECK(two > 50);

  for (int i = 0; i < 100; ++i) {
    const auto ex = compose_scene(rng, pools.train_digits, &pools.train_letters,
                                  TaskKind::Combined);
    REQUIRE(ex.op_letter);
    const int occupied = std::accumulate(ex.occupancy.begin(), ex.occupancy.end(), 0);
    CHECK(occupied == static_cast<int>(ex.digits.size()) + 1);
    if (ex.digits.size() == 3) CHECK(occupied == 4);
  }
}

TEST_CASE("compose_scene: glyphs are pasted exactly and background is black") {
  const auto& pools = small_pools();
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const TaskKind task = i % 2 ? TaskKind::Combined : TaskKind::Prod;
    const auto ex = compose_scene(rng, pools.train_digits, &pools.train_letters, task);
    REQUIRE(ex.image.width == 56);
    for (int cy = 0; cy < 2; ++cy) {
      for (int cx = 0; cx < 2; ++cx) {
        const bool occupied = ex.occupancy[static_cast<std::size_t>(cy * 2 + cx)];
        long mass = 0;
        for (int y = 0; y < 28; ++y) {
          for (int x = 0; x < 28; ++x) mass += ex.image.at(cy * 28 + y, cx * 28 + x);
        }
        if (!occupied) CHECK(mass == 0);
        if (occupied) CHECK(mass > 0);
      }
    }
  }
}

TEST_CASE("compose_scene: too many glyphs for the grid") {
  const auto& pools = small_pools();
  Rng rng(1);
  CHECK_THROWS_AS(compose_scene(rng, pools.train_digits, &pools.train_letters,
                                TaskKind::Sum, SceneOptions{1, 2, 3}),
                  SceneError);
  CHECK_NOTHROW(compose_scene(rng, pools.train_digits, &pools.train_letters, TaskKind::Sum,
                              SceneOptions{1, 1, 1}));
}

TEST_CASE("compose_scene: 1000 Sum scenes stay inside the brute-force range") {
  const auto& pools = small_pools();
  Rng rng(77);
  std::set<int> answers;
  for (int i = 0; i < 1000; ++i) {
    const auto ex = compose_scene(rng, pools.train_digits, nullptr, TaskKind::Sum);
    CHECK(ex.answer >= 0);
    CHECK(ex.answer <= 27);
    answers.insert(ex.answer);
  }
  CHECK(answers.size() > 20);
}

TEST_CASE("salience ground truth") {
  LabeledExample empty;
  empty.grid = 2;
  empty.occupancy.assign(4, 0);
  CHECK(salience_ground_truth(empty) == std::vector<double>(4, 0.0));

  const auto& pools = small_pools();
  Rng rng(3);
  bool saw_full = false;
  for (int i = 0; i < 50; ++i) {
    const auto ex = compose_scene(rng, pools.train_digits, &pools.train_letters,
                                  TaskKind::Combined);
    const auto mask = salience_ground_truth(ex);
    const double total = std::accumulate(mask.begin(), mask.end(), 0.0);
    CHECK(total == static_cast<double>(ex.digits.size() + 1));
    if (total == 4.0) {
      saw_full = true;
      CHECK(mask == std::vector<double>(4, 1.0));
    }
  }
  CHECK(saw_full);
}

TEST_CASE("make_dataset: count, determinism, pool discipline") {
  const auto& pools = small_pools();
  DatasetSpec spec{TaskKind::Sum, 2, 128, 42, Split::Train, 2, 3};
  const auto a = make_dataset(spec, pools);
  const auto b = make_dataset(spec, pools);
  REQUIRE(a.size() == 128);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].image.pixels == b[i].image.pixels);
    CHECK(a[i].glyph_ids == b[i].glyph_ids);
    CHECK(a[i].answer == b[i].answer);
  }

  // No glyph repeats within a dataset.
  std::set<std::uint64_t> train_ids;
  std::size_t total = 0;
  for (const auto& ex : a) {
    train_ids.insert(ex.glyph_ids.begin(), ex.glyph_ids.end());
    total += ex.glyph_ids.size();
  }
  CHECK(train_ids.size() == total);

  spec.split = Split::Test;
  std::set<std::uint64_t> test_ids;
  for (const auto& ex : make_dataset(spec, pools)) {
    test_ids.insert(ex.glyph_ids.begin(), ex.glyph_ids.end());
  }
  std::vector<std::uint64_t> both;
  std::set_intersection(train_ids.begin(), train_ids.end(), test_ids.begin(), test_ids.end(),
                        std::back_inserter(both));
  CHECK(both.empty());

  spec.seed = 43;
  spec.split = Split::Train;
  CHECK(make_dataset(spec, pools)[0].image.pixels != a[0].image.pixels);
}

TEST_CASE("make_dataset: exhausting a pool is an error") {
  const auto& pools = small_pools();
  const DatasetSpec spec{TaskKind::Sum, 2, 300, 1, Split::Test, 2, 3};
  CHECK_THROWS_AS(make_dataset(spec, pools), GlyphPoolExhaustedError);
}

TEST_CASE("make_dataset: every example satisfies the label invariants") {
  const auto& pools = small_pools();
  for (TaskKind t : {TaskKind::Sum, TaskKind::Prod, TaskKind::Max, TaskKind::Min,
                     TaskKind::Combined}) {
    for (const auto& ex : make_dataset({t, 2, 60, 8, Split::Train, 2, 3}, pools)) {
      CHECK(ex.class_index == class_of(task_answer(ex.task, ex.digits, ex.op_letter)));
      CHECK(ex.op_letter.has_value() == (t == TaskKind::Combined));
    }
  }
}

TEST_CASE("dataset cache round trip") {
  TempDir dir;
  const auto& pools = small_pools();
  const DatasetSpec spec{TaskKind::Combined, 2, 20, 5, Split::Train, 2, 3};
  const auto examples = make_dataset(spec, pools);
  save_dataset(dir / "ds.varl", spec, pools.source, examples);
  CHECK(std::filesystem::exists(dir / "ds.varl.json"));
  const auto loaded = load_dataset(dir / "ds.varl");
  CHECK(loaded.source == "synthetic");
  CHECK(loaded.spec.seed == 5);
  CHECK(loaded.spec.task == TaskKind::Combined);
  REQUIRE(loaded.examples.size() == examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    CHECK(loaded.examples[i].image.pixels == examples[i].image.pixels);
    CHECK(loaded.examples[i].cell_content == examples[i].cell_content);
    CHECK(loaded.examples[i].answer == examples[i].answer);
    CHECK(loaded.examples[i].op_letter == examples[i].op_letter);
    CHECK(loaded.examples[i].glyph_ids == examples[i].glyph_ids);
  }

  // Same spec, same bytes.
  save_dataset(dir / "again.varl", spec, pools.source, make_dataset(spec, pools));
  CHECK(varl::testing::read_file(dir / "ds.varl") ==
        varl::testing::read_file(dir / "again.varl"));
}

TEST_CASE("synthetic glyphs: labels cycle and every glyph has ink") {
  const auto set = synthetic_glyphs(GlyphKind::Letters, 40, 3, 100);
  CHECK(set.size() == 40);
  CHECK(set.id(0) == 100);
  CHECK(set.id(39) == 139);
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(set.labels[i] == static_cast<int>(i % 4));
    const auto g = set.glyph(i);
    CHECK(*std::max_element(g.begin(), g.end()) > 100);
  }
}
