// SPDX-License-Identifier: Apache-2.0
//
// Acoustic encoder f(.;theta) and text encoder g(.;phi): single-layer
// bidirectional GRU, last forward/backward states concatenated and affinely
// projected to the shared embedding space.  The text encoder reads character
// ids through a trainable dictionary.  Backward passes are hand-written BPTT
// producing exact parameter gradients.  All parameters of both encoders live
// in one flat vector so the optimizer, the finite-difference harness, and
// the checkpoint format see a single array.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "awemet/common.hpp"
#include "awemet/rng.hpp"

namespace awemet {

struct EncoderDims {
  int feat_dim = 40;    // acoustic features per frame
  int char_dim = 26;    // character embedding width
  int alphabet = 26;    // dictionary rows
  int hidden = 64;      // GRU units per direction (both encoders)
  int embed_dim = 32;   // shared embedding dimension d
  double dropout = 0.4; // acoustic input dropout (train mode only)
};

bool operator==(const EncoderDims& a, const EncoderDims& b);

// Flat-vector segment: a [rows x cols] column-major block at `off`.
struct Seg {
  std::ptrdiff_t off = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

// Per-direction GRU parameters.  Wx rows stack the reset / update /
// candidate gates; Urz stacks reset / update recurrences.
struct GruSegs {
  Seg Wx;   // 3H x I
  Seg Urz;  // 2H x H
  Seg Un;   //  H x H
  Seg b;    // 3H x 1
};

struct EncSegs {
  GruSegs fwd, bwd;
  Seg proj_W;  // d x 2H
  Seg proj_b;  // d x 1
};

struct ParamLayout {
  EncSegs acoustic;
  Seg dict;  // char_dim x alphabet, one column per character
  EncSegs text;
  std::size_t total = 0;
};

ParamLayout make_layout(const EncoderDims& dims);
std::size_t param_count(const EncoderDims& dims);

struct EncoderParams {
  EncoderDims dims;
  Vec flat;
};

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per weight matrix, biases zero,
// dictionary columns scaled like unit-norm inputs.  Deterministic per seed.
EncoderParams init_params(const EncoderDims& dims, std::uint64_t seed);

enum class Mode { Train, Eval };

// Everything the exact backward pass needs, per direction: the (possibly
// dropped-out, possibly reversed) inputs and all gate activations per step.
struct GruCache {
  Mat X;  // I x T inputs as consumed
  Mat R, Z, N, H;  // H x T gate/state trajectories
};

struct AcousticCache {
  GruCache fwd, bwd;
  Vec concat;  // 2H
  Vec emb;     // d
};

struct TextCache {
  std::vector<int> chars;
  GruCache fwd, bwd;
  Vec concat;
  Vec emb;
};

// frames: feat_dim x T, one column per frame.  Train mode applies inverted
// dropout (mask / (1 - p)) to the frame inputs, drawing entry-by-entry in
// column-major order from rng; eval mode never touches rng.  cache may be
// null when no backward pass will follow.
Vec acoustic_forward(const Mat& frames, const EncoderParams& p, Mode mode,
                     Rng* rng, AcousticCache* cache);

// Accumulates dL/d(theta) into grad_flat (sized like p.flat) given
// dL/d(embedding).
void acoustic_backward(const AcousticCache& cache, const EncoderParams& p,
                       const Vec& d_emb, Vec& grad_flat);

// chars: ids in [0, alphabet).  Deterministic; mode accepted for interface
// symmetry but has no effect (no dropout on the text side).
Vec text_forward(const std::vector<int>& chars, const EncoderParams& p,
                 Mode mode, TextCache* cache);

// Dictionary rows receive gradients additively per character occurrence.
void text_backward(const TextCache& cache, const EncoderParams& p,
                   const Vec& d_emb, Vec& grad_flat);

// Versioned binary container: header (magic, version, dims) + raw doubles.
// Round-trip is bit-exact.
void save_checkpoint(const std::string& path, const EncoderParams& p);
EncoderParams load_checkpoint(const std::string& path);

}  // namespace awemet
