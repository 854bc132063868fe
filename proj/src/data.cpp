// SPDX-License-Identifier: Apache-2.0
#include "awemet/data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

#include "awemet/math.hpp"
#include "awemet/parallel.hpp"

namespace awemet {

namespace {
using json = nlohmann::ordered_json;

// Saturating count of distinct strings with lengths in [min_len, max_len].
std::uint64_t string_space(int alphabet, int min_len, int max_len) {
  const std::uint64_t cap = UINT64_MAX / 2;
  std::uint64_t total = 0;
  for (int len = min_len; len <= max_len; ++len) {
    std::uint64_t count = 1;
    for (int i = 0; i < len; ++i) {
      if (count > cap / static_cast<std::uint64_t>(alphabet)) return cap;
      count *= static_cast<std::uint64_t>(alphabet);
    }
    if (total > cap - count) return cap;
    total += count;
  }
  return total;
}
}  // namespace

Lexicon build_lexicon(int num_words, int min_len, int max_len, int alphabet,
                      std::uint64_t seed) {
  if (alphabet < 2 || alphabet > 26)
    throw_usage("build_lexicon: alphabet size must be in [2, 26]");
  if (num_words < 2) throw_usage("build_lexicon: need at least 2 words");
  if (min_len < 1 || max_len < min_len)
    throw_usage("build_lexicon: bad length range");
  if (static_cast<std::uint64_t>(num_words) >
      string_space(alphabet, min_len, max_len))
    throw_usage("build_lexicon: more words requested than distinct strings");

  Lexicon lex;
  lex.alphabet = alphabet;
  lex.seed = seed;
  Rng rng(derive_seed(seed, Stream::Lexicon));
  std::set<std::string> seen;
  std::uint64_t attempts = 0;
  while (static_cast<int>(lex.words.size()) < num_words) {
    if (++attempts > 1000000)
      throw_internal("build_lexicon: rejection sampling did not converge");
    const int len = rng.uniform_int(min_len, max_len);
    std::string w(static_cast<std::size_t>(len), 'a');
    for (int i = 0; i < len; ++i)
      w[static_cast<std::size_t>(i)] +=
          static_cast<char>(rng.uniform_index(
              static_cast<std::uint64_t>(alphabet)));
    if (seen.insert(w).second) lex.words.push_back(w);
  }
  return lex;
}

Mat draw_prototypes(int feat_dim, int alphabet, std::uint64_t seed) {
  Rng rng(derive_seed(seed, Stream::Prototypes));
  Mat protos(feat_dim, alphabet);
  for (int c = 0; c < alphabet; ++c) {
    for (int f = 0; f < feat_dim; ++f) protos(f, c) = rng.normal();
    protos.col(c) /= std::max(protos.col(c).norm(), kNormFloor);
  }
  return protos;
}

std::vector<int> chars_of(const std::string& word) {
  std::vector<int> ids;
  ids.reserve(word.size());
  for (char ch : word) {
    if (ch < 'a' || ch > 'z') throw_usage("chars_of: unknown character");
    ids.push_back(ch - 'a');
  }
  return ids;
}

Mat render_instance(const std::vector<int>& chars, const Mat& prototypes,
                    const DatasetSpec& spec, Rng& rng) {
  if (chars.empty()) throw_usage("render_instance: empty word");
  const int F = static_cast<int>(prototypes.rows());
  Vec offset(F);
  for (int f = 0; f < F; ++f) offset(f) = rng.normal(0.0, spec.speaker_sigma);

  std::vector<Vec> frames;
  for (int ch : chars) {
    if (ch < 0 || ch >= prototypes.cols())
      throw_usage("render_instance: character without a prototype");
    int duration = spec.base_duration +
                   rng.uniform_int(-spec.duration_jitter, spec.duration_jitter);
    duration = std::max(duration, 1);
    for (int d = 0; d < duration; ++d) {
      Vec frame = prototypes.col(ch) + offset;
      for (int f = 0; f < F; ++f) frame(f) += rng.normal(0.0, spec.noise_sigma);
      frames.push_back(std::move(frame));
    }
  }
  Mat out(F, static_cast<Eigen::Index>(frames.size()));
  for (std::size_t t = 0; t < frames.size(); ++t)
    out.col(static_cast<Eigen::Index>(t)) = frames[t];
  return out;
}

namespace {

void check_spec(const DatasetSpec& s) {
  if (s.num_words < 2 || s.instances_per_word < 1)
    throw_usage("dataset spec: need >= 2 words and >= 1 instance per word");
  if (s.feat_dim < 1) throw_usage("dataset spec: feat_dim must be positive");
  if (s.base_duration < 1 || s.duration_jitter < 0 ||
      s.duration_jitter >= s.base_duration)
    throw_usage("dataset spec: duration jitter must stay below the base");
  if (!(s.noise_sigma >= 0.0) || !(s.speaker_sigma >= 0.0))
    throw_usage("dataset spec: sigmas must be nonnegative");
  if (!(s.train_frac >= 0.0) || !(s.dev_frac >= 0.0) ||
      s.train_frac + s.dev_frac > 1.0)
    throw_usage("dataset spec: split fractions must be nonnegative and sum <= 1");
  if (s.unseen_eval_words < 0 || s.unseen_eval_words >= s.num_words)
    throw_usage("dataset spec: unseen_eval_words out of range");
}

}  // namespace

Dataset generate_dataset(const DatasetSpec& spec) {
  check_spec(spec);
  Dataset data;
  data.spec = spec;
  data.lexicon = build_lexicon(spec.num_words, spec.min_word_len,
                               spec.max_word_len, spec.alphabet, spec.seed);
  data.prototypes = draw_prototypes(spec.feat_dim, spec.alphabet, spec.seed);

  const int W = spec.num_words;
  const int n = spec.instances_per_word;

  // Which word classes never appear in train.
  std::vector<int> word_ids(static_cast<std::size_t>(W));
  for (int w = 0; w < W; ++w) word_ids[static_cast<std::size_t>(w)] = w;
  Rng split_rng(derive_seed(spec.seed, Stream::Split));
  split_rng.partial_shuffle(word_ids,
                            static_cast<std::size_t>(spec.unseen_eval_words));
  std::set<int> unseen(word_ids.begin(),
                       word_ids.begin() + spec.unseen_eval_words);

  // Render every instance with its own derived stream; order-independent.
  std::vector<Mat> rendered(static_cast<std::size_t>(W) *
                            static_cast<std::size_t>(n));
  std::vector<std::vector<int>> word_chars(static_cast<std::size_t>(W));
  for (int w = 0; w < W; ++w)
    word_chars[static_cast<std::size_t>(w)] =
        chars_of(data.lexicon.words[static_cast<std::size_t>(w)]);
  parallel_for(rendered.size(), [&](std::size_t i) {
    const int w = static_cast<int>(i) / n;
    const int j = static_cast<int>(i) % n;
    Rng rng(derive_seed(spec.seed, Stream::Render,
                        static_cast<std::uint64_t>(w),
                        static_cast<std::uint64_t>(j)));
    rendered[i] = render_instance(word_chars[static_cast<std::size_t>(w)],
                                  data.prototypes, spec, rng);
  });

  // Assign instances to splits, word by word.
  for (int w = 0; w < W; ++w) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) order[static_cast<std::size_t>(j)] = j;
    Rng rng(derive_seed(spec.seed, Stream::Split,
                        static_cast<std::uint64_t>(w)));
    rng.shuffle(order);
    int n_train = static_cast<int>(spec.train_frac * n + 0.5);
    int n_dev = static_cast<int>(spec.dev_frac * n + 0.5);
    if (unseen.count(w)) {
      n_train = 0;
      n_dev = n / 2;
    }
    n_train = std::min(n_train, n);
    n_dev = std::min(n_dev, n - n_train);
    for (int pos = 0; pos < n; ++pos) {
      const int j = order[static_cast<std::size_t>(pos)];
      Item item;
      item.frames = rendered[static_cast<std::size_t>(w) *
                                 static_cast<std::size_t>(n) +
                             static_cast<std::size_t>(j)];
      item.chars = word_chars[static_cast<std::size_t>(w)];
      item.class_id = w;
      if (pos < n_train)
        data.train.push_back(std::move(item));
      else if (pos < n_train + n_dev)
        data.dev.push_back(std::move(item));
      else
        data.test.push_back(std::move(item));
    }
  }
  return data;
}

namespace {

constexpr std::uint32_t kDatasetMagic = 0x53445741;  // "AWDS" little-endian
constexpr std::uint32_t kDatasetVersion = 1;

template <typename T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
template <typename T>
void get(std::ifstream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
}

void put_items(std::ofstream& os, const std::vector<Item>& items) {
  put(os, static_cast<std::uint64_t>(items.size()));
  for (const Item& it : items) {
    put(os, static_cast<std::int32_t>(it.class_id));
    put(os, static_cast<std::uint32_t>(it.chars.size()));
    for (int ch : it.chars) put(os, static_cast<std::int32_t>(ch));
    put(os, static_cast<std::uint32_t>(it.frames.cols()));
    os.write(reinterpret_cast<const char*>(it.frames.data()),
             static_cast<std::streamsize>(it.frames.size() * sizeof(double)));
  }
}

void get_items(std::ifstream& is, int feat_dim, std::vector<Item>& items,
               const std::string& path) {
  std::uint64_t count = 0;
  get(is, count);
  items.resize(count);
  for (Item& it : items) {
    std::int32_t cls = 0;
    std::uint32_t nchars = 0, frames = 0;
    get(is, cls);
    get(is, nchars);
    it.class_id = cls;
    it.chars.resize(nchars);
    for (std::uint32_t i = 0; i < nchars; ++i) {
      std::int32_t ch = 0;
      get(is, ch);
      it.chars[i] = ch;
    }
    get(is, frames);
    if (!is) throw_io("truncated dataset item: " + path);
    it.frames.resize(feat_dim, frames);
    is.read(reinterpret_cast<char*>(it.frames.data()),
            static_cast<std::streamsize>(it.frames.size() * sizeof(double)));
    if (!is) throw_io("truncated dataset frames: " + path);
  }
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw_io("cannot open dataset for writing: " + path);
  put(os, kDatasetMagic);
  put(os, kDatasetVersion);

  json header;
  header["spec"] = {{"num_words", data.spec.num_words},
                    {"instances_per_word", data.spec.instances_per_word},
                    {"alphabet", data.spec.alphabet},
                    {"min_word_len", data.spec.min_word_len},
                    {"max_word_len", data.spec.max_word_len},
                    {"feat_dim", data.spec.feat_dim},
                    {"base_duration", data.spec.base_duration},
                    {"duration_jitter", data.spec.duration_jitter},
                    {"noise_sigma", data.spec.noise_sigma},
                    {"speaker_sigma", data.spec.speaker_sigma},
                    {"train_frac", data.spec.train_frac},
                    {"dev_frac", data.spec.dev_frac},
                    {"unseen_eval_words", data.spec.unseen_eval_words},
                    {"seed", data.spec.seed}};
  header["words"] = data.lexicon.words;
  header["lexicon_alphabet"] = data.lexicon.alphabet;
  header["lexicon_seed"] = data.lexicon.seed;
  const std::string hs = header.dump();
  put(os, static_cast<std::uint64_t>(hs.size()));
  os.write(hs.data(), static_cast<std::streamsize>(hs.size()));

  put(os, static_cast<std::uint32_t>(data.prototypes.rows()));
  put(os, static_cast<std::uint32_t>(data.prototypes.cols()));
  os.write(reinterpret_cast<const char*>(data.prototypes.data()),
           static_cast<std::streamsize>(data.prototypes.size() *
                                        sizeof(double)));

  put_items(os, data.train);
  put_items(os, data.dev);
  put_items(os, data.test);
  if (!os) throw_io("short write on dataset: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_io("cannot open dataset: " + path);
  std::uint32_t magic = 0, version = 0;
  get(is, magic);
  get(is, version);
  if (!is || magic != kDatasetMagic) throw_io("not a dataset file: " + path);
  if (version != kDatasetVersion)
    throw_io("unsupported dataset version: " + path);

  std::uint64_t hlen = 0;
  get(is, hlen);
  std::string hs(hlen, '\0');
  is.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!is) throw_io("truncated dataset header: " + path);

  Dataset data;
  try {
    const json header = json::parse(hs);
    const json& s = header.at("spec");
    data.spec.num_words = s.at("num_words").get<int>();
    data.spec.instances_per_word = s.at("instances_per_word").get<int>();
    data.spec.alphabet = s.at("alphabet").get<int>();
    data.spec.min_word_len = s.at("min_word_len").get<int>();
    data.spec.max_word_len = s.at("max_word_len").get<int>();
    data.spec.feat_dim = s.at("feat_dim").get<int>();
    data.spec.base_duration = s.at("base_duration").get<int>();
    data.spec.duration_jitter = s.at("duration_jitter").get<int>();
    data.spec.noise_sigma = s.at("noise_sigma").get<double>();
    data.spec.speaker_sigma = s.at("speaker_sigma").get<double>();
    data.spec.train_frac = s.at("train_frac").get<double>();
    data.spec.dev_frac = s.at("dev_frac").get<double>();
    data.spec.unseen_eval_words = s.at("unseen_eval_words").get<int>();
    data.spec.seed = s.at("seed").get<std::uint64_t>();
    data.lexicon.words = header.at("words").get<std::vector<std::string>>();
    data.lexicon.alphabet = header.at("lexicon_alphabet").get<int>();
    data.lexicon.seed = header.at("lexicon_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw_io("corrupt dataset header (" + std::string(e.what()) +
             "): " + path);
  }

  std::uint32_t prows = 0, pcols = 0;
  get(is, prows);
  get(is, pcols);
  if (!is) throw_io("truncated dataset: " + path);
  data.prototypes.resize(prows, pcols);
  is.read(reinterpret_cast<char*>(data.prototypes.data()),
          static_cast<std::streamsize>(data.prototypes.size() *
                                       sizeof(double)));

  get_items(is, data.spec.feat_dim, data.train, path);
  get_items(is, data.spec.feat_dim, data.dev, path);
  get_items(is, data.spec.feat_dim, data.test, path);
  return data;
}

std::vector<int> sample_batch(const std::vector<Item>& split, int classes_m,
                              int items_k, Rng& rng) {
  if (classes_m < 1 || items_k < 1)
    throw_usage("sample_batch: M and K must be positive");
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < split.size(); ++i)
    by_class[split[i].class_id].push_back(static_cast<int>(i));
  if (static_cast<int>(by_class.size()) < classes_m)
    throw_usage("sample_batch: split has fewer classes than requested");

  std::vector<int> pool;
  pool.reserve(by_class.size());
  for (const auto& [cls, idx] : by_class) pool.push_back(cls);

  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    rng.partial_shuffle(pool, static_cast<std::size_t>(classes_m));
    bool ok = true;
    for (int m = 0; m < classes_m; ++m) {
      if (static_cast<int>(
              by_class[pool[static_cast<std::size_t>(m)]].size()) < items_k) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    std::vector<int> batch;
    batch.reserve(static_cast<std::size_t>(classes_m) *
                  static_cast<std::size_t>(items_k));
    for (int m = 0; m < classes_m; ++m) {
      std::vector<int> idx = by_class[pool[static_cast<std::size_t>(m)]];
      rng.partial_shuffle(idx, static_cast<std::size_t>(items_k));
      for (int k = 0; k < items_k; ++k)
        batch.push_back(idx[static_cast<std::size_t>(k)]);
    }
    return batch;
  }
  throw_numeric(
      "sample_batch: no class-balanced batch found after 100 attempts");
}

}  // namespace awemet
