// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "awemet/data.hpp"
#include "awemet/parallel.hpp"
#include "awemet/rng.hpp"

using namespace awemet;

namespace {

DatasetSpec tiny_spec() {
  DatasetSpec s;
  s.num_words = 12;
  s.instances_per_word = 10;
  s.alphabet = 6;
  s.min_word_len = 2;
  s.max_word_len = 4;
  s.feat_dim = 5;
  s.base_duration = 3;
  s.duration_jitter = 1;
  s.seed = 9;
  return s;
}

}  // namespace

TEST_CASE("lexicon: distinct words, valid letters, exhaustion guard") {
  Lexicon lex = build_lexicon(40, 2, 4, 5, 3);
  REQUIRE(lex.words.size() == 40);
  std::set<std::string> uniq(lex.words.begin(), lex.words.end());
  CHECK(uniq.size() == 40);
  for (const std::string& w : lex.words) {
    CHECK(w.size() >= 2);
    CHECK(w.size() <= 4);
    for (char c : w) {
      CHECK(c >= 'a');
      CHECK(c < 'a' + 5);
    }
  }

  // alphabet 2, lengths 1..2: exactly 2 + 4 = 6 possible words.
  Lexicon full = build_lexicon(6, 1, 2, 2, 1);
  std::set<std::string> all(full.words.begin(), full.words.end());
  CHECK(all.size() == 6);
  CHECK_THROWS_AS(build_lexicon(7, 1, 2, 2, 1), Error);

  // Determinism.
  CHECK(build_lexicon(40, 2, 4, 5, 3).words == lex.words);
  CHECK(build_lexicon(40, 2, 4, 5, 4).words != lex.words);

  CHECK_THROWS_AS(build_lexicon(10, 3, 2, 5, 1), Error);   // min > max
  CHECK_THROWS_AS(build_lexicon(10, 1, 2, 27, 1), Error);  // alphabet > 26
}

TEST_CASE("larger default-style lexicon has no duplicates") {
  Lexicon lex = build_lexicon(500, 3, 8, 26, 42);
  std::set<std::string> uniq(lex.words.begin(), lex.words.end());
  CHECK(uniq.size() == 500);
}

TEST_CASE("chars_of maps letters and rejects anything else") {
  CHECK(chars_of("cab") == std::vector<int>({2, 0, 1}));
  CHECK_THROWS_AS(chars_of("Abc"), Error);
  CHECK_THROWS_AS(chars_of("a b"), Error);
}

TEST_CASE("render: duration bounds and noiseless prototype copies") {
  DatasetSpec spec = tiny_spec();
  Mat protos = draw_prototypes(spec.feat_dim, spec.alphabet, 4);
  for (int c = 0; c < spec.alphabet; ++c)
    CHECK(protos.col(c).norm() == doctest::Approx(1.0).epsilon(1e-12));

  // With all randomness amplitudes at zero, frames are exact prototype
  // repeats: base_duration copies per character.
  DatasetSpec clean = spec;
  clean.noise_sigma = 0.0;
  clean.speaker_sigma = 0.0;
  clean.duration_jitter = 0;
  Rng rng(5);
  const std::vector<int> word = {2, 0, 4};
  Mat frames = render_instance(word, protos, clean, rng);
  REQUIRE(frames.cols() == 3 * clean.base_duration);
  for (int k = 0; k < 3; ++k)
    for (int t = 0; t < clean.base_duration; ++t)
      CHECK((frames.col(k * clean.base_duration + t) - protos.col(word[k]))
                .cwiseAbs()
                .maxCoeff() == 0.0);

  // Jittered durations stay within the advertised band.
  Rng rng2(6);
  for (int rep = 0; rep < 50; ++rep) {
    Mat f = render_instance(word, protos, spec, rng2);
    CHECK(f.cols() >= 3 * (spec.base_duration - spec.duration_jitter));
    CHECK(f.cols() <= 3 * (spec.base_duration + spec.duration_jitter));
  }

  DatasetSpec bad = spec;
  bad.duration_jitter = bad.base_duration;  // would allow zero-length chars
  CHECK_THROWS_AS(generate_dataset(bad), Error);
}

TEST_CASE("generate: split sizes, class coverage, and per-class ordering") {
  const DatasetSpec spec = tiny_spec();
  Dataset data = generate_dataset(spec);

  CHECK(data.lexicon.words.size() == 12);
  CHECK(data.train.size() == 12 * 8);
  CHECK(data.dev.size() == 12 * 1);
  CHECK(data.test.size() == 12 * 1);

  std::set<int> train_classes, dev_classes;
  for (const Item& it : data.train) train_classes.insert(it.class_id);
  for (const Item& it : data.dev) dev_classes.insert(it.class_id);
  CHECK(train_classes.size() == 12);
  CHECK(dev_classes.size() == 12);

  for (const Item& it : data.train) {
    CHECK(it.frames.rows() == spec.feat_dim);
    CHECK(it.chars == chars_of(data.lexicon.words[static_cast<std::size_t>(
                          it.class_id)]));
  }
}

TEST_CASE("generate: default fractions yield an 80/10/10 split") {
  DatasetSpec spec = tiny_spec();
  spec.num_words = 25;
  spec.instances_per_word = 20;
  Dataset data = generate_dataset(spec);
  CHECK(data.train.size() == 25 * 16);
  CHECK(data.dev.size() == 25 * 2);
  CHECK(data.test.size() == 25 * 2);
}

TEST_CASE("generate: unseen words never reach the train split") {
  DatasetSpec spec = tiny_spec();
  spec.unseen_eval_words = 3;
  Dataset data = generate_dataset(spec);

  std::set<int> train_classes;
  for (const Item& it : data.train) train_classes.insert(it.class_id);
  CHECK(train_classes.size() == 9);

  std::map<int, int> dev_count, test_count;
  for (const Item& it : data.dev) dev_count[it.class_id]++;
  for (const Item& it : data.test) test_count[it.class_id]++;
  int unseen = 0;
  for (int c = 0; c < 12; ++c)
    if (!train_classes.count(c)) {
      ++unseen;
      CHECK(dev_count[c] == 5);  // half of the 10 instances
      CHECK(test_count[c] == 5);
    }
  CHECK(unseen == 3);
}

TEST_CASE("generate: deterministic and worker-count independent") {
  const DatasetSpec spec = tiny_spec();
  set_num_workers(1);
  Dataset a = generate_dataset(spec);
  set_num_workers(4);
  Dataset b = generate_dataset(spec);
  set_num_workers(0);

  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].class_id == b.train[i].class_id);
    CHECK(a.train[i].frames == b.train[i].frames);
  }
  CHECK(a.prototypes == b.prototypes);

  DatasetSpec other = spec;
  other.seed = spec.seed + 1;
  Dataset c = generate_dataset(other);
  CHECK(a.train[0].frames != c.train[0].frames);
}

TEST_CASE("dataset container round-trips bit-exactly") {
  const DatasetSpec spec = tiny_spec();
  Dataset data = generate_dataset(spec);
  const std::string path =
      (std::filesystem::temp_directory_path() / "awemet_data_test.bin")
          .string();
  save_dataset(path, data);
  Dataset back = load_dataset(path);

  CHECK(back.lexicon.words == data.lexicon.words);
  CHECK(back.prototypes == data.prototypes);
  CHECK(back.spec.seed == data.spec.seed);
  CHECK(back.spec.noise_sigma == data.spec.noise_sigma);
  REQUIRE(back.train.size() == data.train.size());
  REQUIRE(back.dev.size() == data.dev.size());
  REQUIRE(back.test.size() == data.test.size());
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    CHECK(back.train[i].frames == data.train[i].frames);
    CHECK(back.train[i].chars == data.train[i].chars);
    CHECK(back.train[i].class_id == data.train[i].class_id);
  }

  // Re-saving the loaded copy produces identical bytes.
  const std::string path2 =
      (std::filesystem::temp_directory_path() / "awemet_data_test2.bin")
          .string();
  save_dataset(path2, back);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)),
                       std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)),
                       std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK(!b1.empty());

  CHECK_THROWS_AS(load_dataset("/nonexistent/nowhere.bin"), Error);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("batch sampler: balance, determinism, and validation") {
  const DatasetSpec spec = tiny_spec();
  Dataset data = generate_dataset(spec);

  Rng rng(77);
  std::vector<int> batch = sample_batch(data.train, 4, 2, rng);
  REQUIRE(batch.size() == 8);
  std::map<int, int> per_class;
  for (int idx : batch)
    per_class[data.train[static_cast<std::size_t>(idx)].class_id]++;
  CHECK(per_class.size() == 4);
  for (const auto& [cls, count] : per_class) CHECK(count == 2);
  std::set<int> uniq(batch.begin(), batch.end());
  CHECK(uniq.size() == batch.size());  // no index repeats within a batch

  Rng r1(5), r2(5);
  CHECK(sample_batch(data.train, 4, 2, r1) == sample_batch(data.train, 4, 2, r2));

  CHECK_THROWS_AS(sample_batch(data.train, 13, 2, rng), Error);
  CHECK_THROWS_AS(sample_batch(data.train, 4, 9, rng), Error);
}

TEST_CASE("batch sampler: class selection is close to uniform") {
  const DatasetSpec spec = tiny_spec();
  Dataset data = generate_dataset(spec);
  Rng rng(123);
  std::map<int, int> hits;
  const int reps = 6000;
  for (int r = 0; r < reps; ++r)
    for (int idx : sample_batch(data.train, 2, 1, rng))
      hits[data.train[static_cast<std::size_t>(idx)].class_id]++;
  // Each of the 12 classes is expected in 2/12 of draws: 1000 hits,
  // sd = sqrt(6000 * (1/6) * (5/6)) ~ 29. Allow 5 sigma.
  for (int c = 0; c < 12; ++c) CHECK(std::abs(hits[c] - 1000) < 150);
}
