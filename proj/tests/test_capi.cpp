// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "awemet.h"

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const char* name)
      : path(std::filesystem::temp_directory_path() /
             (std::string("awemet_capi_") + name)) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const char* rel) const { return (path / rel).string(); }
};

void write_file(const std::string& path, const std::string& body) {
  std::ofstream os(path, std::ios::binary);
  REQUIRE(bool(os));
  os << body;
}

// Small geometry so the whole pipeline runs in seconds.
const char* kDataConfig = R"({
  "num_words": 8,
  "instances_per_word": 20,
  "alphabet": 8,
  "min_word_len": 2,
  "max_word_len": 3,
  "feat_dim": 6,
  "base_duration": 2,
  "duration_jitter": 1,
  "seed": 5
})";

const char* kTrainConfig = R"({
  "method": "asymmetric-proxy",
  "epochs": 2,
  "batch_classes": 4,
  "batch_items": 2,
  "lr": 0.002,
  "seed": 7,
  "encoder": {"char_dim": 6, "hidden": 6, "embed_dim": 6, "dropout": 0.2}
})";

}  // namespace

TEST_CASE("version and error plumbing") {
  REQUIRE(awemet_version() != nullptr);
  CHECK(std::strlen(awemet_version()) > 0);

  double ap = -1.0;
  CHECK(awemet_average_precision(nullptr, nullptr, 3, &ap) ==
        AWEMET_ERR_USAGE);
  CHECK(std::strlen(awemet_last_error()) > 0);

  const double scores[4] = {0.9, 0.8, 0.7, 0.6};
  const int32_t labels[4] = {1, 0, 1, 0};
  REQUIRE(awemet_average_precision(scores, labels, 4, &ap) == AWEMET_OK);
  CHECK(ap == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));
  CHECK(std::strlen(awemet_last_error()) == 0);

  const int32_t bad_labels[4] = {1, 0, 2, 0};
  CHECK(awemet_average_precision(scores, bad_labels, 4, &ap) ==
        AWEMET_ERR_USAGE);
}

TEST_CASE("dtw entry point") {
  // Two 1-frame sequences pointing in opposite directions: cost 2, length 1.
  const double a[2] = {1.0, 0.0};
  const double b[2] = {-1.0, 0.0};
  double sim = 0.0;
  REQUIRE(awemet_dtw_similarity(a, 2, 1, b, 1, &sim) == AWEMET_OK);
  CHECK(sim == doctest::Approx(-2.0).epsilon(1e-12));
  REQUIRE(awemet_dtw_similarity(a, 2, 1, a, 1, &sim) == AWEMET_OK);
  CHECK(sim == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(awemet_dtw_similarity(nullptr, 2, 1, b, 1, &sim) == AWEMET_ERR_USAGE);
  CHECK(awemet_dtw_similarity(a, 2, 0, b, 1, &sim) == AWEMET_ERR_USAGE);
}

TEST_CASE("generate / open / train / evaluate / report round trip") {
  TempDir dir("pipeline");
  write_file(dir.file("data.json"), kDataConfig);
  write_file(dir.file("train.json"), kTrainConfig);

  REQUIRE(awemet_generate(dir.file("data.json").c_str(),
                          dir.file("data").c_str(), 0, 0) == AWEMET_OK);
  const std::string ds_path = dir.file("data/dataset.bin");
  REQUIRE(std::filesystem::exists(ds_path));

  awemet_dataset* ds = nullptr;
  REQUIRE(awemet_dataset_open(ds_path.c_str(), &ds) == AWEMET_OK);
  uint64_t train = 0, dev = 0, test = 0, words = 0;
  REQUIRE(awemet_dataset_counts(ds, &train, &dev, &test) == AWEMET_OK);
  REQUIRE(awemet_dataset_num_words(ds, &words) == AWEMET_OK);
  CHECK(words == 8);
  CHECK(train + dev + test == 160);
  CHECK(train == 128);  // 8 words * 16 train instances each
  awemet_dataset_close(ds);

  REQUIRE(awemet_train(dir.file("train.json").c_str(), ds_path.c_str(),
                       dir.file("run").c_str(), 0, 0) == AWEMET_OK);
  CHECK(std::filesystem::exists(dir.file("run/run_record.json")));
  CHECK(std::filesystem::exists(dir.file("run/curve.csv")));
  CHECK(std::filesystem::exists(dir.file("run/checkpoint.bin")));

  REQUIRE(awemet_evaluate(nullptr, ds_path.c_str(),
                          dir.file("run/checkpoint.bin").c_str(),
                          dir.file("eval").c_str(), 0, 0) == AWEMET_OK);
  CHECK(std::filesystem::exists(dir.file("eval/eval_report.json")));
  CHECK(std::filesystem::exists(dir.file("eval/eval_report.txt")));

  REQUIRE(awemet_report(dir.file("run/run_record.json").c_str(),
                        dir.file("run/summary.txt").c_str()) == AWEMET_OK);
  CHECK(std::filesystem::exists(dir.file("run/summary.txt")));

  // The destination directory is created on demand, like other commands.
  REQUIRE(awemet_report(dir.file("run/run_record.json").c_str(),
                        dir.file("fresh/report.txt").c_str()) == AWEMET_OK);
  CHECK(std::filesystem::exists(dir.file("fresh/report.txt")));

  // Same config and seed again: the stored records repeat byte for byte.
  REQUIRE(awemet_train(dir.file("train.json").c_str(), ds_path.c_str(),
                       dir.file("run2").c_str(), 0, 0) == AWEMET_OK);
  auto slurp = [](const std::string& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)),
                       std::istreambuf_iterator<char>());
  };
  CHECK(slurp(dir.file("run/run_record.json")) ==
        slurp(dir.file("run2/run_record.json")));
  CHECK(slurp(dir.file("run/curve.csv")) == slurp(dir.file("run2/curve.csv")));
  CHECK(slurp(dir.file("run/checkpoint.bin")) ==
        slurp(dir.file("run2/checkpoint.bin")));

  // Seed override changes the outcome.
  REQUIRE(awemet_train(dir.file("train.json").c_str(), ds_path.c_str(),
                       dir.file("run3").c_str(), 1, 1234) == AWEMET_OK);
  CHECK(slurp(dir.file("run/checkpoint.bin")) !=
        slurp(dir.file("run3/checkpoint.bin")));
}

TEST_CASE("malformed or invalid inputs leave no partial outputs") {
  TempDir dir("errors");
  write_file(dir.file("bad.json"), "{ not json");
  write_file(dir.file("unknown.json"), R"({"learning_rate": 0.1})");
  write_file(dir.file("data.json"), kDataConfig);

  REQUIRE(awemet_generate(dir.file("data.json").c_str(),
                          dir.file("data").c_str(), 0, 0) == AWEMET_OK);
  const std::string ds_path = dir.file("data/dataset.bin");

  CHECK(awemet_train(dir.file("bad.json").c_str(), ds_path.c_str(),
                     dir.file("out_a").c_str(), 0, 0) == AWEMET_ERR_USAGE);
  CHECK_FALSE(std::filesystem::exists(dir.file("out_a/run_record.json")));
  CHECK(awemet_train(dir.file("unknown.json").c_str(), ds_path.c_str(),
                     dir.file("out_b").c_str(), 0, 0) == AWEMET_ERR_USAGE);
  CHECK_FALSE(std::filesystem::exists(dir.file("out_b/run_record.json")));
  CHECK(std::strlen(awemet_last_error()) > 0);

  // Default batch geometry (64 classes) exceeds the micro dataset's 8 words.
  CHECK(awemet_train(nullptr, ds_path.c_str(), dir.file("out_c").c_str(), 0,
                     0) != AWEMET_OK);
  CHECK(awemet_train("", nullptr, dir.file("out_d").c_str(), 0, 0) ==
        AWEMET_ERR_USAGE);

  CHECK(awemet_dataset_open(dir.file("nope.bin").c_str(), nullptr) ==
        AWEMET_ERR_USAGE);
  awemet_dataset* ds = nullptr;
  CHECK(awemet_dataset_open(dir.file("nope.bin").c_str(), &ds) ==
        AWEMET_ERR_IO);
  CHECK(ds == nullptr);

  CHECK(awemet_report(dir.file("nope.json").c_str(),
                      dir.file("x.txt").c_str()) == AWEMET_ERR_IO);

  // Checkpoint geometry must match the dataset it is scored on.
  write_file(dir.file("train.json"), kTrainConfig);
  REQUIRE(awemet_train(dir.file("train.json").c_str(), ds_path.c_str(),
                       dir.file("run").c_str(), 0, 0) == AWEMET_OK);
  write_file(dir.file("wide.json"), R"({
    "num_words": 4, "instances_per_word": 20, "alphabet": 8,
    "min_word_len": 2, "max_word_len": 3, "feat_dim": 9,
    "base_duration": 2, "duration_jitter": 1, "seed": 6
  })");
  REQUIRE(awemet_generate(dir.file("wide.json").c_str(),
                          dir.file("wide").c_str(), 0, 0) == AWEMET_OK);
  CHECK(awemet_evaluate(nullptr, dir.file("wide/dataset.bin").c_str(),
                        dir.file("run/checkpoint.bin").c_str(),
                        dir.file("eval_bad").c_str(), 0, 0) ==
        AWEMET_ERR_USAGE);
}

TEST_CASE("grad check via the C interface") {
  TempDir dir("gc");
  // Tiny audit so the unit test stays fast; the full sweep lives in the
  // acceptance binary.
  write_file(dir.file("gc.json"), R"({
    "embed_batches": 2,
    "param_batches": 1,
    "seed": 3
  })");
  REQUIRE(awemet_grad_check(dir.file("gc.json").c_str(), dir.file("out").c_str(),
                            0, 0) == AWEMET_OK);
  CHECK(std::filesystem::exists(dir.file("out/grad_check.json")));
  CHECK(std::filesystem::exists(dir.file("out/grad_check.txt")));

  write_file(dir.file("strict.json"), R"({
    "embed_batches": 1,
    "param_batches": 1,
    "tol_embed": 1e-15,
    "tol_param": 1e-15
  })");
  CHECK(awemet_grad_check(dir.file("strict.json").c_str(), "", 0, 0) ==
        AWEMET_ERR_NUMERIC);
  CHECK(std::strlen(awemet_last_error()) > 0);
}

TEST_CASE("grid via the C interface") {
  TempDir dir("grid");
  write_file(dir.file("data.json"), kDataConfig);
  REQUIRE(awemet_generate(dir.file("data.json").c_str(),
                          dir.file("data").c_str(), 0, 0) == AWEMET_OK);
  write_file(dir.file("grid.json"), R"({
    "methods": ["dtw", "contrastive"],
    "repeats": 1,
    "epochs": 1,
    "batch_classes": 4,
    "batch_items": 2,
    "seed": 7,
    "encoder": {"char_dim": 6, "hidden": 6, "embed_dim": 6, "dropout": 0.2}
  })");
  REQUIRE(awemet_grid(dir.file("grid.json").c_str(),
                      dir.file("data/dataset.bin").c_str(),
                      dir.file("out").c_str(), 0, 0) == AWEMET_OK);
  CHECK(std::filesystem::exists(dir.file("out/grid_report.json")));
  CHECK(std::filesystem::exists(dir.file("out/grid_table.txt")));
  CHECK(std::filesystem::exists(dir.file("out/grid_table.csv")));
}
