// SPDX-License-Identifier: Apache-2.0
#include "awemet/encoder.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace awemet {

bool operator==(const EncoderDims& a, const EncoderDims& b) {
  return a.feat_dim == b.feat_dim && a.char_dim == b.char_dim &&
         a.alphabet == b.alphabet && a.hidden == b.hidden &&
         a.embed_dim == b.embed_dim && a.dropout == b.dropout;
}

namespace {

Seg place(std::size_t& at, Eigen::Index rows, Eigen::Index cols) {
  Seg s{static_cast<std::ptrdiff_t>(at), rows, cols};
  at += s.size();
  return s;
}

GruSegs place_gru(std::size_t& at, int input, int hidden) {
  GruSegs g;
  g.Wx = place(at, 3 * hidden, input);
  g.Urz = place(at, 2 * hidden, hidden);
  g.Un = place(at, hidden, hidden);
  g.b = place(at, 3 * hidden, 1);
  return g;
}

EncSegs place_encoder(std::size_t& at, int input, int hidden, int embed) {
  EncSegs e;
  e.fwd = place_gru(at, input, hidden);
  e.bwd = place_gru(at, input, hidden);
  e.proj_W = place(at, embed, 2 * hidden);
  e.proj_b = place(at, embed, 1);
  return e;
}

using MatView = Eigen::Map<Mat>;
using ConstMatView = Eigen::Map<const Mat>;

ConstMatView view(const Vec& flat, const Seg& s) {
  return ConstMatView(flat.data() + s.off, s.rows, s.cols);
}

MatView view(Vec& flat, const Seg& s) {
  return MatView(flat.data() + s.off, s.rows, s.cols);
}

}  // namespace

ParamLayout make_layout(const EncoderDims& dims) {
  if (dims.feat_dim < 1 || dims.char_dim < 1 || dims.alphabet < 1 ||
      dims.hidden < 1 || dims.embed_dim < 1)
    throw_usage("encoder dims must all be positive");
  if (!(dims.dropout >= 0.0 && dims.dropout < 1.0))
    throw_usage("dropout must lie in [0, 1)");
  ParamLayout lay;
  std::size_t at = 0;
  lay.acoustic = place_encoder(at, dims.feat_dim, dims.hidden, dims.embed_dim);
  lay.dict = place(at, dims.char_dim, dims.alphabet);
  lay.text = place_encoder(at, dims.char_dim, dims.hidden, dims.embed_dim);
  lay.total = at;
  return lay;
}

std::size_t param_count(const EncoderDims& dims) {
  return make_layout(dims).total;
}

EncoderParams init_params(const EncoderDims& dims, std::uint64_t seed) {
  const ParamLayout lay = make_layout(dims);
  EncoderParams p;
  p.dims = dims;
  p.flat = Vec::Zero(static_cast<Eigen::Index>(lay.total));
  Rng rng(derive_seed(seed, Stream::Init));

  auto fill = [&](const Seg& s, double bound) {
    MatView m = view(p.flat, s);
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        m(r, c) = rng.uniform(-bound, bound);
  };
  auto fill_gru = [&](const GruSegs& g, int input, int hidden) {
    fill(g.Wx, 1.0 / std::sqrt(static_cast<double>(input)));
    fill(g.Urz, 1.0 / std::sqrt(static_cast<double>(hidden)));
    fill(g.Un, 1.0 / std::sqrt(static_cast<double>(hidden)));
    // gate biases stay zero
  };
  auto fill_enc = [&](const EncSegs& e, int input) {
    fill_gru(e.fwd, input, dims.hidden);
    fill_gru(e.bwd, input, dims.hidden);
    fill(e.proj_W, 1.0 / std::sqrt(2.0 * dims.hidden));
    // projection bias stays zero
  };
  fill_enc(lay.acoustic, dims.feat_dim);
  // Dictionary columns act as inputs; scale them to roughly unit norm.
  fill(lay.dict, 1.0 / std::sqrt(static_cast<double>(dims.char_dim)));
  fill_enc(lay.text, dims.char_dim);
  return p;
}

namespace {

// One GRU direction over X (I x T, already in scan order).  Fills the cache
// and returns the final hidden state.
Vec gru_forward(const Vec& flat, const GruSegs& segs, const Mat& X,
                GruCache* cache) {
  const ConstMatView Wx = view(flat, segs.Wx);
  const ConstMatView Urz = view(flat, segs.Urz);
  const ConstMatView Un = view(flat, segs.Un);
  const ConstMatView b = view(flat, segs.b);
  const int H = static_cast<int>(segs.Un.rows);
  const Eigen::Index T = X.cols();

  // Input transforms for the whole sequence in one product.
  Mat AX = (Wx * X).colwise() + b.col(0);

  Mat R(H, T), Z(H, T), N(H, T), Hs(H, T);
  Vec h = Vec::Zero(H);
  Vec arz(2 * H), an(H);
  for (Eigen::Index t = 0; t < T; ++t) {
    arz = AX.col(t).head(2 * H) + Urz * h;
    for (int u = 0; u < H; ++u) {
      R(u, t) = 1.0 / (1.0 + std::exp(-arz(u)));
      Z(u, t) = 1.0 / (1.0 + std::exp(-arz(H + u)));
    }
    an = AX.col(t).tail(H) + Un * (R.col(t).cwiseProduct(h));
    for (int u = 0; u < H; ++u) N(u, t) = std::tanh(an(u));
    Hs.col(t) = (Vec::Ones(H) - Z.col(t)).cwiseProduct(N.col(t)) +
                Z.col(t).cwiseProduct(h);
    h = Hs.col(t);
  }
  if (cache) {
    cache->X = X;
    cache->R = std::move(R);
    cache->Z = std::move(Z);
    cache->N = std::move(N);
    cache->H = std::move(Hs);
  }
  return h;
}

// BPTT for one direction.  d_h_last is dL/d(final state); parameter
// gradients accumulate into grad_flat.  When dX is non-null the input
// gradient (I x T) is written there (needed only by the text encoder).
void gru_backward(const Vec& flat, const GruSegs& segs, const GruCache& c,
                  const Vec& d_h_last, Vec& grad_flat, Mat* dX) {
  const ConstMatView Wx = view(flat, segs.Wx);
  const ConstMatView Urz = view(flat, segs.Urz);
  const ConstMatView Un = view(flat, segs.Un);
  const int H = static_cast<int>(segs.Un.rows);
  const Eigen::Index T = c.X.cols();

  Mat DA(3 * H, T);  // gate pre-activation gradients, columns per step
  Vec dh = d_h_last;
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const auto r = c.R.col(t);
    const auto z = c.Z.col(t);
    const auto n = c.N.col(t);
    const Vec h_prev = t > 0 ? Vec(c.H.col(t - 1)) : Vec(Vec::Zero(H));

    const Vec dz = dh.cwiseProduct(h_prev - n);
    const Vec dn = dh.cwiseProduct(Vec::Ones(H) - z);
    const Vec da_n =
        dn.cwiseProduct(Vec::Ones(H) - n.cwiseProduct(n));
    const Vec drh = Un.transpose() * da_n;
    const Vec dr = drh.cwiseProduct(h_prev);
    const Vec da_r =
        dr.cwiseProduct(r.cwiseProduct(Vec::Ones(H) - r));
    const Vec da_z =
        dz.cwiseProduct(z.cwiseProduct(Vec::Ones(H) - z));

    DA.col(t).head(H) = da_r;
    DA.col(t).segment(H, H) = da_z;
    DA.col(t).tail(H) = da_n;

    dh = dh.cwiseProduct(z) + drh.cwiseProduct(r) +
         Urz.transpose() * DA.col(t).head(2 * H);
  }

  // Previous-state trajectory (h_0 = 0) for the recurrent weight gradients.
  Mat Hprev = Mat::Zero(H, T);
  if (T > 1) Hprev.rightCols(T - 1) = c.H.leftCols(T - 1);

  view(grad_flat, segs.Wx) += DA * c.X.transpose();
  view(grad_flat, segs.Urz) += DA.topRows(2 * H) * Hprev.transpose();
  view(grad_flat, segs.Un) +=
      DA.bottomRows(H) * c.R.cwiseProduct(Hprev).transpose();
  view(grad_flat, segs.b).col(0) += DA.rowwise().sum();
  if (dX) *dX = Wx.transpose() * DA;
}

// Shared tail: concat last states, project, cache.
template <typename Cache>
Vec project_concat(const Vec& flat, const EncSegs& segs, const Vec& h_fwd,
                   const Vec& h_bwd, Cache* cache) {
  const int H = static_cast<int>(segs.fwd.Un.rows);
  Vec concat(2 * H);
  concat.head(H) = h_fwd;
  concat.tail(H) = h_bwd;
  Vec emb = view(flat, segs.proj_W) * concat + view(flat, segs.proj_b).col(0);
  if (cache) {
    cache->concat = concat;
    cache->emb = emb;
  }
  return emb;
}

// Shared head of backward: projection gradients, then per-direction BPTT.
template <typename Cache>
void backward_through(const Vec& flat, const EncSegs& segs,
                      const Cache& cache, const Vec& d_emb, Vec& grad_flat,
                      Mat* dX_fwd, Mat* dX_bwd) {
  const int H = static_cast<int>(segs.fwd.Un.rows);
  view(grad_flat, segs.proj_W) += d_emb * cache.concat.transpose();
  view(grad_flat, segs.proj_b).col(0) += d_emb;
  const Vec dconcat = view(flat, segs.proj_W).transpose() * d_emb;
  gru_backward(flat, segs.fwd, cache.fwd, dconcat.head(H), grad_flat, dX_fwd);
  gru_backward(flat, segs.bwd, cache.bwd, dconcat.tail(H), grad_flat, dX_bwd);
}

}  // namespace

Vec acoustic_forward(const Mat& frames, const EncoderParams& p, Mode mode,
                     Rng* rng, AcousticCache* cache) {
  const ParamLayout lay = make_layout(p.dims);
  if (frames.rows() != p.dims.feat_dim)
    throw_usage("acoustic_forward: feature width mismatch");
  if (frames.cols() < 1) throw_usage("acoustic_forward: empty sequence");

  Mat X = frames;
  if (mode == Mode::Train && p.dims.dropout > 0.0) {
    if (!rng) throw_usage("acoustic_forward: train mode needs an rng");
    const double keep = 1.0 - p.dims.dropout;
    for (Eigen::Index t = 0; t < X.cols(); ++t)
      for (Eigen::Index f = 0; f < X.rows(); ++f)
        X(f, t) = rng->uniform() < keep ? X(f, t) / keep : 0.0;
  }

  const Vec h_fwd =
      gru_forward(p.flat, lay.acoustic.fwd, X, cache ? &cache->fwd : nullptr);
  const Mat Xrev = X.rowwise().reverse();
  const Vec h_bwd = gru_forward(p.flat, lay.acoustic.bwd, Xrev,
                                cache ? &cache->bwd : nullptr);
  return project_concat(p.flat, lay.acoustic, h_fwd, h_bwd, cache);
}

void acoustic_backward(const AcousticCache& cache, const EncoderParams& p,
                       const Vec& d_emb, Vec& grad_flat) {
  const ParamLayout lay = make_layout(p.dims);
  if (grad_flat.size() != p.flat.size())
    throw_usage("acoustic_backward: gradient buffer size mismatch");
  backward_through(p.flat, lay.acoustic, cache, d_emb, grad_flat, nullptr,
                   nullptr);
}

Vec text_forward(const std::vector<int>& chars, const EncoderParams& p,
                 Mode /*mode*/, TextCache* cache) {
  const ParamLayout lay = make_layout(p.dims);
  if (chars.empty()) throw_usage("text_forward: empty character sequence");
  for (int ch : chars)
    if (ch < 0 || ch >= p.dims.alphabet)
      throw_usage("text_forward: character id out of alphabet bounds");

  const ConstMatView dict = view(p.flat, lay.dict);
  Mat X(p.dims.char_dim, static_cast<Eigen::Index>(chars.size()));
  for (std::size_t l = 0; l < chars.size(); ++l)
    X.col(static_cast<Eigen::Index>(l)) = dict.col(chars[l]);

  if (cache) cache->chars = chars;
  const Vec h_fwd =
      gru_forward(p.flat, lay.text.fwd, X, cache ? &cache->fwd : nullptr);
  const Mat Xrev = X.rowwise().reverse();
  const Vec h_bwd =
      gru_forward(p.flat, lay.text.bwd, Xrev, cache ? &cache->bwd : nullptr);
  return project_concat(p.flat, lay.text, h_fwd, h_bwd, cache);
}

void text_backward(const TextCache& cache, const EncoderParams& p,
                   const Vec& d_emb, Vec& grad_flat) {
  const ParamLayout lay = make_layout(p.dims);
  if (grad_flat.size() != p.flat.size())
    throw_usage("text_backward: gradient buffer size mismatch");
  Mat dX_fwd, dX_bwd;
  backward_through(p.flat, lay.text, cache, d_emb, grad_flat, &dX_fwd,
                   &dX_bwd);
  // The backward direction consumed reversed columns; undo before scatter.
  const Mat dX = dX_fwd + dX_bwd.rowwise().reverse();
  MatView d_dict = view(grad_flat, lay.dict);
  for (std::size_t l = 0; l < cache.chars.size(); ++l)
    d_dict.col(cache.chars[l]) += dX.col(static_cast<Eigen::Index>(l));
}

namespace {
constexpr std::uint32_t kCheckpointMagic = 0x43'4D'57'41;  // "AWMC" LE
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
template <typename T>
void get(std::ifstream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
}
}  // namespace

void save_checkpoint(const std::string& path, const EncoderParams& p) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw_io("cannot open checkpoint for writing: " + path);
  put(os, kCheckpointMagic);
  put(os, kCheckpointVersion);
  put(os, static_cast<std::int32_t>(p.dims.feat_dim));
  put(os, static_cast<std::int32_t>(p.dims.char_dim));
  put(os, static_cast<std::int32_t>(p.dims.alphabet));
  put(os, static_cast<std::int32_t>(p.dims.hidden));
  put(os, static_cast<std::int32_t>(p.dims.embed_dim));
  put(os, p.dims.dropout);
  put(os, static_cast<std::uint64_t>(p.flat.size()));
  os.write(reinterpret_cast<const char*>(p.flat.data()),
           static_cast<std::streamsize>(p.flat.size() * sizeof(double)));
  if (!os) throw_io("short write on checkpoint: " + path);
}

EncoderParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_io("cannot open checkpoint: " + path);
  std::uint32_t magic = 0, version = 0;
  get(is, magic);
  get(is, version);
  if (!is || magic != kCheckpointMagic)
    throw_io("not a checkpoint file: " + path);
  if (version != kCheckpointVersion) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "unsupported checkpoint version %u",
                  version);
    throw_io(std::string(buf) + ": " + path);
  }
  EncoderParams p;
  std::int32_t v = 0;
  get(is, v);
  p.dims.feat_dim = v;
  get(is, v);
  p.dims.char_dim = v;
  get(is, v);
  p.dims.alphabet = v;
  get(is, v);
  p.dims.hidden = v;
  get(is, v);
  p.dims.embed_dim = v;
  get(is, p.dims.dropout);
  std::uint64_t count = 0;
  get(is, count);
  if (!is) throw_io("truncated checkpoint header: " + path);
  if (count != param_count(p.dims))
    throw_io("checkpoint parameter count does not match its dims: " + path);
  p.flat.resize(static_cast<Eigen::Index>(count));
  is.read(reinterpret_cast<char*>(p.flat.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw_io("truncated checkpoint payload: " + path);
  return p;
}

}  // namespace awemet
