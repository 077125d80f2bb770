// Copyright 2026 The chartrole Authors.
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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "chartrole/encoder.hpp"
#include "chartrole/kernels.hpp"
#include "chartrole/rng.hpp"

namespace chartrole {

namespace k = kernels::omp;

namespace {

constexpr double kLnEps = 1e-5;
constexpr std::size_t R = kNumRoles;

using Vec = std::vector<double>;

std::size_t fourier_dim(const EncoderConfig& c) {
  return 6 * 2 * static_cast<std::size_t>(c.fourier_frequencies);
}

// T x F features of the quantized token boxes.
Vec fourier_features(const TokenizedSample& t, const EncoderConfig& c) {
  const std::size_t F = fourier_dim(c);
  const int K = c.fourier_frequencies;
  Vec out(t.size() * F);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& b = t.boxes[i];
    const double bins = c.position_bins;
    const double vals[6] = {b[0] / bins, b[1] / bins, b[2] / bins,
                            b[3] / bins, (b[2] - b[0]) / bins, (b[3] - b[1]) / bins};
    double* row = &out[i * F];
    for (int j = 0; j < 6; ++j) {
      for (int f = 0; f < K; ++f) {
        const double a = std::numbers::pi * std::ldexp(1.0, f) * vals[j];
        row[(j * K + f) * 2] = std::sin(a);
        row[(j * K + f) * 2 + 1] = std::cos(a);
      }
    }
  }
  return out;
}

double sinusoid(int pos, std::size_t i, std::size_t d) {
  const double expo = static_cast<double>(i - i % 2) / static_cast<double>(d);
  const double a = pos / std::pow(10000.0, expo);
  return i % 2 == 0 ? std::sin(a) : std::cos(a);
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }
double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)) +
         x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Row-wise layer norm of n x d `x`; writes y, per-row mean and 1/std.
void layer_norm(const double* x, const double* gamma, const double* beta, std::size_t n,
                std::size_t d, double* y, double* mean, double* rstd) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * d;
    double m = 0;
    for (std::size_t j = 0; j < d; ++j) m += xi[j];
    m /= static_cast<double>(d);
    double var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (xi[j] - m) * (xi[j] - m);
    var /= static_cast<double>(d);
    const double r = 1.0 / std::sqrt(var + kLnEps);
    mean[i] = m;
    rstd[i] = r;
    double* yi = y + i * d;
    for (std::size_t j = 0; j < d; ++j) yi[j] = (xi[j] - m) * r * gamma[j] + beta[j];
  }
}

// Adds d(loss)/dx to dx; accumulates gamma/beta gradients.
void layer_norm_backward(const double* x, const double* mean, const double* rstd,
                         const double* gamma, const double* dy, std::size_t n, std::size_t d,
                         double* dx, double* dgamma, double* dbeta) {
  Vec xhat(d), dxhat(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * d;
    const double* dyi = dy + i * d;
    double s1 = 0, s2 = 0;
    for (std::size_t j = 0; j < d; ++j) {
      xhat[j] = (xi[j] - mean[i]) * rstd[i];
      dxhat[j] = dyi[j] * gamma[j];
      dgamma[j] += dyi[j] * xhat[j];
      dbeta[j] += dyi[j];
      s1 += dxhat[j];
      s2 += dxhat[j] * xhat[j];
    }
    s1 /= static_cast<double>(d);
    s2 /= static_cast<double>(d);
    double* dxi = dx + i * d;
    for (std::size_t j = 0; j < d; ++j) dxi[j] += rstd[i] * (dxhat[j] - s1 - xhat[j] * s2);
  }
}

void add_bias(double* y, const double* b, std::size_t n, std::size_t d) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) y[i * d + j] += b[j];
  }
}

void col_sum(const double* y, std::size_t n, std::size_t d, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[j] += y[i * d + j];
  }
}

std::span<const double> cspan(const double* p, std::size_t n) { return {p, n}; }
std::span<double> mspan(double* p, std::size_t n) { return {p, n}; }

// Copies head h columns of an n x D matrix into n x hd.
void gather_head(const double* src, std::size_t n, std::size_t D, std::size_t h, std::size_t hd,
                 double* dst) {
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(src + i * D + h * hd, hd, dst + i * hd);
  }
}

void scatter_head(const double* src, std::size_t n, std::size_t D, std::size_t h, std::size_t hd,
                  double* dst) {
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(src + i * hd, hd, dst + i * D + h * hd);
  }
}

std::string lname(int l, const char* what) { return "layer" + std::to_string(l) + "." + what; }

}  // namespace

std::vector<ParamTensor> EncoderModel::layout(const EncoderConfig& c) {
  std::vector<ParamTensor> t;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols, bool decay) {
    t.push_back({std::move(name), offset, rows, cols, decay});
    offset += rows * cols;
  };
  const std::size_t D = static_cast<std::size_t>(c.hidden_size);
  const std::size_t F = static_cast<std::size_t>(c.ffn_size);
  add("token_embedding", static_cast<std::size_t>(c.vocab_size), D, true);
  add("box_projection", fourier_dim(c), D, true);
  add("box_bias", 1, D, false);
  add("patch_projection", static_cast<std::size_t>(c.patch_dim()), D, true);
  add("patch_bias", 1, D, false);
  add("patch_position", static_cast<std::size_t>(c.num_patches()), D, true);
  for (int l = 0; l < c.layers; ++l) {
    add(lname(l, "ln1_gamma"), 1, D, false);
    add(lname(l, "ln1_beta"), 1, D, false);
    add(lname(l, "wq"), D, D, true);
    add(lname(l, "bq"), 1, D, false);
    add(lname(l, "wk"), D, D, true);
    add(lname(l, "bk"), 1, D, false);
    add(lname(l, "wv"), D, D, true);
    add(lname(l, "bv"), 1, D, false);
    add(lname(l, "wo"), D, D, true);
    add(lname(l, "bo"), 1, D, false);
    add(lname(l, "ln2_gamma"), 1, D, false);
    add(lname(l, "ln2_beta"), 1, D, false);
    add(lname(l, "w1"), D, F, true);
    add(lname(l, "b1"), 1, F, false);
    add(lname(l, "w2"), F, D, true);
    add(lname(l, "b2"), 1, D, false);
  }
  add("final_gamma", 1, D, false);
  add("final_beta", 1, D, false);
  add("classifier", D, R, true);
  add("classifier_bias", 1, R, false);
  return t;
}

EncoderModel::EncoderModel(const EncoderConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  if (config_.vocab_size < 2) throw std::invalid_argument("encoder config: vocab_size not set");
  tensors_ = layout(config_);
  for (std::size_t i = 0; i < tensors_.size(); ++i) by_name_[tensors_[i].name] = i;
  params_.assign(tensors_.back().offset + tensors_.back().size(), 0.0);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, config_.init_std);
  for (const auto& t : tensors_) {
    double* p = &params_[t.offset];
    const bool gamma = t.name.ends_with("gamma");
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = gamma ? 1.0 : (t.decay ? normal(rng) : 0.0);
  }
}

EncoderModel::EncoderModel(const EncoderConfig& config, std::vector<double> weights)
    : config_(config) {
  config_.validate();
  tensors_ = layout(config_);
  for (std::size_t i = 0; i < tensors_.size(); ++i) by_name_[tensors_[i].name] = i;
  const std::size_t expected = tensors_.back().offset + tensors_.back().size();
  if (weights.size() != expected) {
    throw std::invalid_argument("weight count " + std::to_string(weights.size()) +
                                " does not match the config (" + std::to_string(expected) + ")");
  }
  params_ = std::move(weights);
}

const ParamTensor& EncoderModel::tensor(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("no parameter tensor '" + name + "'");
  return tensors_[it->second];
}

std::vector<double> EncoderModel::embed(const ModelInput& in) const {
  const auto& c = config_;
  const std::size_t D = static_cast<std::size_t>(c.hidden_size);
  const std::size_t T = in.tokens.size();
  const std::size_t P = in.patches.count();
  if (P != static_cast<std::size_t>(c.num_patches()) || in.patches.dim != c.patch_dim()) {
    throw std::invalid_argument("patch grid does not match the encoder config");
  }
  if (in.plan.n_tokens != T || in.plan.scheme != c.scheme) {
    throw std::invalid_argument("fusion plan does not match the input");
  }
  const double* W = params_.data();
  auto at = [&](const char* name) { return W + tensor(name).offset; };

  // Patch embeddings for the full grid.
  Vec pe(P * D);
  k::gemm(in.patches.values, cspan(at("patch_projection"), static_cast<std::size_t>(c.patch_dim()) * D),
          pe, P, static_cast<std::size_t>(c.patch_dim()), D);
  add_bias(pe.data(), at("patch_bias"), P, D);
  const double* ppos = at("patch_position");
  for (std::size_t i = 0; i < P * D; ++i) pe[i] += ppos[i];

  Vec x(in.plan.length() * D);
  if (T > 0) {
    const Vec ff = fourier_features(in.tokens, c);
    const std::size_t F = fourier_dim(c);
    k::gemm(ff, cspan(at("box_projection"), F * D), mspan(x.data(), T * D), T, F, D);
    add_bias(x.data(), at("box_bias"), T, D);
    const double* emb = at("token_embedding");
    for (std::size_t t = 0; t < T; ++t) {
      const int id = in.tokens.token_ids[t];
      if (id < 0 || id >= c.vocab_size) throw std::out_of_range("token id outside the vocabulary");
      double* row = &x[t * D];
      const double* e = emb + static_cast<std::size_t>(id) * D;
      for (std::size_t j = 0; j < D; ++j) row[j] += e[j] + sinusoid(in.tokens.positions[t], j, D);
      const int p = in.plan.token_patch[t];
      if (p >= 0) {
        for (std::size_t j = 0; j < D; ++j) row[j] += pe[static_cast<std::size_t>(p) * D + j];
      }
    }
  }
  for (std::size_t i = 0; i < in.plan.plain_patches.size(); ++i) {
    std::copy_n(&pe[static_cast<std::size_t>(in.plan.plain_patches[i]) * D], D, &x[(T + i) * D]);
  }
  return x;
}

std::vector<RoleLogits> EncoderModel::forward(const ModelInput& in, ForwardCache* cache) const {
  const auto& c = config_;
  const std::size_t D = static_cast<std::size_t>(c.hidden_size);
  const std::size_t F = static_cast<std::size_t>(c.ffn_size);
  const std::size_t H = static_cast<std::size_t>(c.heads);
  const std::size_t hd = D / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const std::size_t T = in.tokens.size();
  const double* W = params_.data();
  auto at = [&](const std::string& name) { return W + tensor(name).offset; };

  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  Vec x = embed(in);
  const std::size_t n = x.size() / D;
  fc.n = n;
  if (cache) fc.x0 = x;
  fc.layers.resize(static_cast<std::size_t>(c.layers));

  Vec qh(n * hd), kh(n * hd), vh(n * hd), oh(n * hd), tmp(n * D);
  for (int l = 0; l < c.layers; ++l) {
    auto& L = fc.layers[static_cast<std::size_t>(l)];
    L.x = x;
    L.ln1.resize(n * D);
    L.mean1.resize(n);
    L.rstd1.resize(n);
    layer_norm(x.data(), at(lname(l, "ln1_gamma")), at(lname(l, "ln1_beta")), n, D, L.ln1.data(),
               L.mean1.data(), L.rstd1.data());
    L.q.assign(n * D, 0);
    L.k.assign(n * D, 0);
    L.v.assign(n * D, 0);
    k::gemm(L.ln1, cspan(at(lname(l, "wq")), D * D), L.q, n, D, D);
    k::gemm(L.ln1, cspan(at(lname(l, "wk")), D * D), L.k, n, D, D);
    k::gemm(L.ln1, cspan(at(lname(l, "wv")), D * D), L.v, n, D, D);
    add_bias(L.q.data(), at(lname(l, "bq")), n, D);
    add_bias(L.k.data(), at(lname(l, "bk")), n, D);
    add_bias(L.v.data(), at(lname(l, "bv")), n, D);

    L.probs.assign(H * n * n, 0);
    L.attn.assign(n * D, 0);
    for (std::size_t h = 0; h < H; ++h) {
      gather_head(L.q.data(), n, D, h, hd, qh.data());
      gather_head(L.k.data(), n, D, h, hd, kh.data());
      gather_head(L.v.data(), n, D, h, hd, vh.data());
      auto probs = mspan(&L.probs[h * n * n], n * n);
      k::gemm_bt(qh, kh, probs, n, hd, n);
      for (std::size_t i = 0; i < n; ++i) {
        double* row = &probs[i * n];
        double mx = -1e300;
        for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, row[j] * scale);
        double sum = 0;
        for (std::size_t j = 0; j < n; ++j) sum += (row[j] = std::exp(row[j] * scale - mx));
        for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
      }
      k::gemm(probs, vh, oh, n, n, hd);
      scatter_head(oh.data(), n, D, h, hd, L.attn.data());
    }
    k::gemm(L.attn, cspan(at(lname(l, "wo")), D * D), tmp, n, D, D);
    add_bias(tmp.data(), at(lname(l, "bo")), n, D);
    L.h.resize(n * D);
    for (std::size_t i = 0; i < n * D; ++i) L.h[i] = x[i] + tmp[i];

    L.ln2.resize(n * D);
    L.mean2.resize(n);
    L.rstd2.resize(n);
    layer_norm(L.h.data(), at(lname(l, "ln2_gamma")), at(lname(l, "ln2_beta")), n, D, L.ln2.data(),
               L.mean2.data(), L.rstd2.data());
    L.f1.assign(n * F, 0);
    k::gemm(L.ln2, cspan(at(lname(l, "w1")), D * F), L.f1, n, D, F);
    add_bias(L.f1.data(), at(lname(l, "b1")), n, F);
    L.g.resize(n * F);
    for (std::size_t i = 0; i < n * F; ++i) L.g[i] = gelu(L.f1[i]);
    k::gemm(L.g, cspan(at(lname(l, "w2")), F * D), tmp, n, F, D);
    add_bias(tmp.data(), at(lname(l, "b2")), n, D);
    for (std::size_t i = 0; i < n * D; ++i) x[i] = L.h[i] + tmp[i];
  }

  // Only text rows are classified.
  fc.xl = x;
  fc.lnf.resize(T * D);
  fc.meanf.resize(T);
  fc.rstdf.resize(T);
  layer_norm(x.data(), at("final_gamma"), at("final_beta"), T, D, fc.lnf.data(), fc.meanf.data(),
             fc.rstdf.data());
  Vec tl(T * R);
  k::gemm(fc.lnf, cspan(at("classifier"), D * R), tl, T, D, R);
  add_bias(tl.data(), at("classifier_bias"), T, R);

  std::vector<RoleLogits> out;
  out.reserve(in.tokens.spans.size());
  for (const auto& s : in.tokens.spans) {
    RoleLogits r{};
    if (s.end <= s.begin || s.end > T) throw std::logic_error("block span outside the token range");
    if (c.pooling == BlockPooling::kFirst) {
      for (std::size_t j = 0; j < R; ++j) r[j] = tl[s.begin * R + j];
    } else {
      for (std::size_t t = s.begin; t < s.end; ++t) {
        for (std::size_t j = 0; j < R; ++j) r[j] += tl[t * R + j];
      }
      for (auto& v : r) v /= static_cast<double>(s.end - s.begin);
    }
    out.push_back(r);
  }
  if (!cache) fc = ForwardCache{};
  return out;
}

void EncoderModel::backward(const ModelInput& in, const ForwardCache& fc,
                            std::span<const RoleLogits> d_logits, std::span<double> grad) const {
  const auto& c = config_;
  const std::size_t D = static_cast<std::size_t>(c.hidden_size);
  const std::size_t F = static_cast<std::size_t>(c.ffn_size);
  const std::size_t H = static_cast<std::size_t>(c.heads);
  const std::size_t hd = D / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const std::size_t T = in.tokens.size();
  const std::size_t n = fc.n;
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer has the wrong size");
  if (d_logits.size() != in.tokens.spans.size()) {
    throw std::invalid_argument("one logit gradient per block span expected");
  }
  const double* W = params_.data();
  auto at = [&](const std::string& name) { return W + tensor(name).offset; };
  auto gat = [&](const std::string& name) { return grad.data() + tensor(name).offset; };
  auto gspan = [&](const std::string& name) {
    const auto& t = tensor(name);
    return grad.subspan(t.offset, t.size());
  };

  // Pooling and classifier.
  Vec dtl(T * R, 0.0);
  for (std::size_t b = 0; b < in.tokens.spans.size(); ++b) {
    const auto& s = in.tokens.spans[b];
    if (c.pooling == BlockPooling::kFirst) {
      for (std::size_t j = 0; j < R; ++j) dtl[s.begin * R + j] += d_logits[b][j];
    } else {
      const double inv = 1.0 / static_cast<double>(s.end - s.begin);
      for (std::size_t t = s.begin; t < s.end; ++t) {
        for (std::size_t j = 0; j < R; ++j) dtl[t * R + j] += d_logits[b][j] * inv;
      }
    }
  }
  k::gemm_at(fc.lnf, dtl, gspan("classifier"), D, T, R, true);
  col_sum(dtl.data(), T, R, gat("classifier_bias"));
  Vec dlnf(T * D);
  k::gemm_bt(dtl, cspan(at("classifier"), D * R), dlnf, T, R, D);
  Vec dx(n * D, 0.0);
  layer_norm_backward(fc.xl.data(), fc.meanf.data(), fc.rstdf.data(), at("final_gamma"), dlnf.data(),
                      T, D, dx.data(), gat("final_gamma"), gat("final_beta"));

  Vec dh(n * D), dg(n * F), dln(n * D), dattn(n * D), dq(n * D), dk(n * D), dv(n * D);
  Vec qh(n * hd), kh(n * hd), vh(n * hd), doh(n * hd), dqh(n * hd), dkh(n * hd), dvh(n * hd);
  Vec dp(n * n);
  for (int l = c.layers - 1; l >= 0; --l) {
    const auto& L = fc.layers[static_cast<std::size_t>(l)];
    // x_out = h + ffn(ln2(h))
    dh = dx;
    k::gemm_at(L.g, dx, gspan(lname(l, "w2")), F, n, D, true);
    col_sum(dx.data(), n, D, gat(lname(l, "b2")));
    k::gemm_bt(dx, cspan(at(lname(l, "w2")), F * D), dg, n, D, F);
    for (std::size_t i = 0; i < n * F; ++i) dg[i] *= gelu_grad(L.f1[i]);
    k::gemm_at(L.ln2, dg, gspan(lname(l, "w1")), D, n, F, true);
    col_sum(dg.data(), n, F, gat(lname(l, "b1")));
    k::gemm_bt(dg, cspan(at(lname(l, "w1")), D * F), dln, n, F, D);
    layer_norm_backward(L.h.data(), L.mean2.data(), L.rstd2.data(), at(lname(l, "ln2_gamma")),
                        dln.data(), n, D, dh.data(), gat(lname(l, "ln2_gamma")),
                        gat(lname(l, "ln2_beta")));

    // h = x + attn(ln1(x)) wo + bo
    dx = dh;
    k::gemm_at(L.attn, dh, gspan(lname(l, "wo")), D, n, D, true);
    col_sum(dh.data(), n, D, gat(lname(l, "bo")));
    k::gemm_bt(dh, cspan(at(lname(l, "wo")), D * D), dattn, n, D, D);
    for (std::size_t h = 0; h < H; ++h) {
      gather_head(L.q.data(), n, D, h, hd, qh.data());
      gather_head(L.k.data(), n, D, h, hd, kh.data());
      gather_head(L.v.data(), n, D, h, hd, vh.data());
      gather_head(dattn.data(), n, D, h, hd, doh.data());
      const auto probs = cspan(&L.probs[h * n * n], n * n);
      k::gemm_bt(doh, vh, dp, n, hd, n);
      k::gemm_at(probs, doh, dvh, n, n, hd);
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0;
        for (std::size_t j = 0; j < n; ++j) dot += dp[i * n + j] * probs[i * n + j];
        for (std::size_t j = 0; j < n; ++j) {
          dp[i * n + j] = probs[i * n + j] * (dp[i * n + j] - dot) * scale;
        }
      }
      k::gemm(dp, kh, dqh, n, n, hd);
      k::gemm_at(dp, qh, dkh, n, n, hd);
      scatter_head(dqh.data(), n, D, h, hd, dq.data());
      scatter_head(dkh.data(), n, D, h, hd, dk.data());
      scatter_head(dvh.data(), n, D, h, hd, dv.data());
    }
    k::gemm_at(L.ln1, dq, gspan(lname(l, "wq")), D, n, D, true);
    k::gemm_at(L.ln1, dk, gspan(lname(l, "wk")), D, n, D, true);
    k::gemm_at(L.ln1, dv, gspan(lname(l, "wv")), D, n, D, true);
    col_sum(dq.data(), n, D, gat(lname(l, "bq")));
    col_sum(dk.data(), n, D, gat(lname(l, "bk")));
    col_sum(dv.data(), n, D, gat(lname(l, "bv")));
    k::gemm_bt(dq, cspan(at(lname(l, "wq")), D * D), dln, n, D, D);
    k::gemm_bt(dk, cspan(at(lname(l, "wk")), D * D), dln, n, D, D, true);
    k::gemm_bt(dv, cspan(at(lname(l, "wv")), D * D), dln, n, D, D, true);
    layer_norm_backward(L.x.data(), L.mean1.data(), L.rstd1.data(), at(lname(l, "ln1_gamma")),
                        dln.data(), n, D, dx.data(), gat(lname(l, "ln1_gamma")),
                        gat(lname(l, "ln1_beta")));
  }

  // Embeddings.
  const std::size_t P = in.patches.count();
  Vec dpe(P * D, 0.0);
  for (std::size_t i = 0; i < in.plan.plain_patches.size(); ++i) {
    const std::size_t p = static_cast<std::size_t>(in.plan.plain_patches[i]);
    for (std::size_t j = 0; j < D; ++j) dpe[p * D + j] += dx[(T + i) * D + j];
  }
  if (T > 0) {
    const Vec ff = fourier_features(in.tokens, c);
    const std::size_t Fd = fourier_dim(c);
    const auto dtext = cspan(dx.data(), T * D);
    k::gemm_at(ff, dtext, gspan("box_projection"), Fd, T, D, true);
    col_sum(dx.data(), T, D, gat("box_bias"));
    double* demb = gat("token_embedding");
    for (std::size_t t = 0; t < T; ++t) {
      double* row = demb + static_cast<std::size_t>(in.tokens.token_ids[t]) * D;
      for (std::size_t j = 0; j < D; ++j) row[j] += dx[t * D + j];
      const int p = in.plan.token_patch[t];
      if (p >= 0) {
        for (std::size_t j = 0; j < D; ++j) dpe[static_cast<std::size_t>(p) * D + j] += dx[t * D + j];
      }
    }
  }
  k::gemm_at(in.patches.values, dpe, gspan("patch_projection"), static_cast<std::size_t>(c.patch_dim()),
             P, D, true);
  col_sum(dpe.data(), P, D, gat("patch_bias"));
  double* dpos = gat("patch_position");
  for (std::size_t i = 0; i < P * D; ++i) dpos[i] += dpe[i];
}

std::vector<BlockPrediction> encode_classify(const ChartSample& sample, const Vocab& vocab,
                                             const EncoderModel& model) {
  const ModelInput in = prepare_input(sample, vocab, model.config());
  const auto logits = model.forward(in);
  std::map<int, RoleLogits> by_block;
  for (std::size_t i = 0; i < in.tokens.spans.size(); ++i) by_block[in.tokens.spans[i].block_id] = logits[i];
  std::vector<BlockPrediction> out;
  out.reserve(sample.blocks.size());
  for (const auto& b : sample.blocks) {
    BlockPrediction p;
    p.block_id = b.block_id;
    auto it = by_block.find(b.block_id);
    if (it != by_block.end()) {
      p.logits = it->second;
    } else {
      p.truncated = true;
    }
    out.push_back(p);
  }
  return out;
}

std::vector<BlockPrediction> encode_classify(const ChartSample& sample, const Checkpoint& ckpt) {
  const EncoderModel model(ckpt.config, ckpt.weights);
  return encode_classify(sample, ckpt.vocab, model);
}

}  // namespace chartrole
