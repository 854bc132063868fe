// SPDX-License-Identifier: Apache-2.0
//
// Synthetic word-segment corpus: a seeded lexicon of distinct character
// strings, per-character acoustic prototypes on the unit sphere, a noisy
// renderer with duration jitter and per-instance speaker offsets, persisted
// datasets, and a class-balanced multi-view batch sampler.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "awemet/common.hpp"
#include "awemet/rng.hpp"

namespace awemet {

struct Lexicon {
  std::vector<std::string> words;  // index = class id; letters 'a' + id
  int alphabet = 26;
  std::uint64_t seed = 0;
};

struct DatasetSpec {
  int num_words = 200;
  int instances_per_word = 40;
  int alphabet = 26;
  int min_word_len = 3;
  int max_word_len = 8;
  int feat_dim = 40;
  int base_duration = 5;    // frames per character before jitter
  int duration_jitter = 2;  // uniform in [-jitter, +jitter] per character
  double noise_sigma = 0.25;
  double speaker_sigma = 0.2;  // per-instance offset; dominant nuisance frame averaging cannot remove
  double train_frac = 0.8;
  double dev_frac = 0.1;  // remainder is test
  int unseen_eval_words = 0;  // word classes held out of train entirely
  std::uint64_t seed = 1;
};

struct Item {
  Mat frames;  // feat_dim x T, one column per frame
  std::vector<int> chars;
  int class_id = -1;
};

struct Dataset {
  DatasetSpec spec;
  Lexicon lexicon;
  Mat prototypes;  // feat_dim x alphabet, unit columns
  std::vector<Item> train, dev, test;
};

// W distinct strings, lengths uniform in [min_len, max_len], duplicate
// rejection.  Throws when W exceeds the number of possible strings.
Lexicon build_lexicon(int num_words, int min_len, int max_len, int alphabet,
                      std::uint64_t seed);

// Unit-sphere prototype per character, drawn from the lexicon seed stream.
Mat draw_prototypes(int feat_dim, int alphabet, std::uint64_t seed);

// One noisy instance: each character's prototype repeated for a jittered
// duration, i.i.d. Gaussian noise per entry, plus one constant per-instance
// offset vector (the "speaker").  Draw order: offset, then per character
// (duration, then frame entries), so parallel generation stays bit-stable.
Mat render_instance(const std::vector<int>& chars, const Mat& prototypes,
                    const DatasetSpec& spec, Rng& rng);

std::vector<int> chars_of(const std::string& word);

Dataset generate_dataset(const DatasetSpec& spec);

// Self-describing binary container; round-trips bit-exactly.
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

// Class-balanced batch: M distinct classes, K instances each, as indices
// into `split`.  Classes lacking K instances are redrawn up to a fixed cap,
// then the sampler errors out.
std::vector<int> sample_batch(const std::vector<Item>& split, int classes_m,
                              int items_k, Rng& rng);

}  // namespace awemet
