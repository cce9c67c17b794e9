// Copyright 2026 The memetag Authors
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

#include "memetag/model/transformer.hpp"

#include <cmath>

namespace memetag {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

Mat layer_norm(const Mat& x, const Mat& gamma, const Mat& beta, LayerNormCache& c) {
  const Eigen::Index n = x.rows();
  const double d = static_cast<double>(x.cols());
  c.xhat.resize(n, x.cols());
  c.rstd.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.row(i).sum() / d;
    const double var = (x.row(i).array() - mu).square().sum() / d;
    c.rstd(i) = 1.0 / std::sqrt(var + kLnEps);
    c.xhat.row(i) = (x.row(i).array() - mu) * c.rstd(i);
  }
  Mat y = c.xhat.array().rowwise() * gamma.row(0).array();
  y.rowwise() += beta.row(0);
  return y;
}

Mat layer_norm_backward(const Mat& dy, const LayerNormCache& c, const Mat& gamma, Mat& dgamma,
                        Mat& dbeta) {
  dgamma.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  dbeta.row(0) += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * gamma.row(0).array();
  const double d = static_cast<double>(dy.cols());
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double mean_dxhat = dxhat.row(i).sum() / d;
    const double mean_dxhat_xhat = (dxhat.row(i).array() * c.xhat.row(i).array()).sum() / d;
    dx.row(i) = c.rstd(i) *
                (dxhat.row(i).array() - mean_dxhat - c.xhat.row(i).array() * mean_dxhat_xhat);
  }
  return dx;
}

Mat linear(const Mat& x, const Mat& w, const Mat& b) {
  Mat y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x))); }

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, const Dropout& dropout) {
  if (!dropout.active()) return Mat();
  const double keep = 1.0 - dropout.rate;
  Mat mask(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      mask(i, j) = dropout.stream->uniform() < keep ? 1.0 / keep : 0.0;
    }
  }
  return mask;
}

void apply_mask(Mat& x, const Mat& mask) {
  if (mask.size() > 0) x.array() *= mask.array();
}

void check_inputs(const VLModel& model, const InputSequence& seq, const Mat& features) {
  const auto& cfg = model.config;
  if (static_cast<std::size_t>(features.cols()) != cfg.d_v) {
    throw ConfigError("feature table has dimension " + std::to_string(features.cols()) +
                      ", model expects d_v = " + std::to_string(cfg.d_v));
  }
  if (seq.max_len() > cfg.max_len) {
    throw ConfigError("sequence length " + std::to_string(seq.max_len()) + " exceeds model max_len " +
                      std::to_string(cfg.max_len));
  }
  seq.validate(static_cast<std::size_t>(features.rows()));
  for (std::size_t i = 0; i < seq.length(); ++i) {
    if (static_cast<std::size_t>(seq.token_ids[i]) >= cfg.vocab_size) {
      throw ConfigError("token id " + std::to_string(seq.token_ids[i]) + " outside vocabulary of size " +
                        std::to_string(cfg.vocab_size));
    }
  }
}

}  // namespace

Mat feature_table(const ImageRegions& regions) {
  const auto d = static_cast<Eigen::Index>(regions.whole_image.feature.size());
  Mat table(static_cast<Eigen::Index>(regions.table_size()), d);
  for (std::size_t r = 0; r < regions.table_size(); ++r) {
    const auto& f = regions.row(r).feature;
    if (static_cast<Eigen::Index>(f.size()) != d) throw ConfigError("inconsistent region feature dimension");
    for (Eigen::Index j = 0; j < d; ++j) table(static_cast<Eigen::Index>(r), j) = f[static_cast<std::size_t>(j)];
  }
  return table;
}

Eigen::VectorXd encode(const VLModel& model, const InputSequence& seq, const Mat& features,
                       ForwardCache* cache, Dropout dropout) {
  check_inputs(model, seq, features);
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  const auto& b = model.backbone;
  const auto& cfg = model.config;
  const auto n = static_cast<Eigen::Index>(seq.length());
  const auto d = static_cast<Eigen::Index>(cfg.d_h);

  c.n = static_cast<std::size_t>(n);
  c.tokens.assign(seq.token_ids.begin(), seq.token_ids.begin() + n);
  c.segments.assign(seq.segment_ids.begin(), seq.segment_ids.begin() + n);
  c.positions.assign(seq.position_ids.begin(), seq.position_ids.begin() + n);
  c.visual_rows.resize(n, features.cols());
  for (Eigen::Index i = 0; i < n; ++i) c.visual_rows.row(i) = features.row(seq.visual_index[static_cast<std::size_t>(i)]);

  Mat x = linear(c.visual_rows, b.visual_w, b.visual_b);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    x.row(i) += b.token_emb.row(c.tokens[ui]) + b.segment_emb.row(c.segments[ui]) +
                b.position_emb.row(c.positions[ui]);
  }
  Mat h = layer_norm(x, b.emb_ln_gamma, b.emb_ln_beta, c.emb_ln);
  c.emb_mask = dropout_mask(n, d, dropout);
  apply_mask(h, c.emb_mask);

  const auto heads = static_cast<Eigen::Index>(cfg.n_heads);
  const Eigen::Index dk = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  c.layers.resize(b.layers.size());
  for (std::size_t li = 0; li < b.layers.size(); ++li) {
    const auto& L = b.layers[li];
    auto& lc = c.layers[li];
    lc.input = h;
    lc.q = linear(h, L.wq, L.bq);
    lc.k = linear(h, L.wk, L.bk);
    lc.v = linear(h, L.wv, L.bv);
    lc.probs.resize(static_cast<std::size_t>(heads));
    lc.attn.resize(n, d);
    for (Eigen::Index hh = 0; hh < heads; ++hh) {
      Mat s = (lc.q.middleCols(hh * dk, dk) * lc.k.middleCols(hh * dk, dk).transpose()) * scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mx = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - mx).exp().matrix();
        s.row(i) /= s.row(i).sum();
      }
      lc.attn.middleCols(hh * dk, dk) = s * lc.v.middleCols(hh * dk, dk);
      lc.probs[static_cast<std::size_t>(hh)] = std::move(s);
    }
    Mat o = linear(lc.attn, L.wo, L.bo);
    lc.attn_mask = dropout_mask(n, d, dropout);
    apply_mask(o, lc.attn_mask);
    lc.h1 = layer_norm(h + o, L.ln1_gamma, L.ln1_beta, lc.ln1);

    lc.f1 = linear(lc.h1, L.w1, L.b1);
    lc.g = lc.f1.unaryExpr([](double v) { return gelu(v); });
    Mat f2 = linear(lc.g, L.w2, L.b2);
    lc.ffn_mask = dropout_mask(n, d, dropout);
    apply_mask(f2, lc.ffn_mask);
    h = layer_norm(lc.h1 + f2, L.ln2_gamma, L.ln2_beta, lc.ln2);
  }

  c.cls = h.row(0);
  Eigen::RowVectorXd z = c.cls * b.pool_w + b.pool_b.row(0);
  Eigen::VectorXd pooled = z.array().tanh().matrix().transpose();
  if (dropout.active()) {
    const Mat m = dropout_mask(d, 1, dropout);
    c.pooled_mask = m.col(0);
    pooled.array() *= c.pooled_mask.array();
  } else {
    c.pooled_mask.resize(0);
  }
  c.pooled = pooled;
  return pooled;
}

Eigen::Vector2d forward(const VLModel& model, const InputSequence& seq, const Mat& features,
                        ForwardCache* cache, Dropout dropout) {
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  const Eigen::VectorXd pooled = encode(model, seq, features, &c, dropout);
  c.logits = model.head.apply(pooled);
  return c.logits;
}

void backward(const VLModel& model, const ForwardCache& c, const Eigen::Vector2d& dlogits,
              VLModel& grads) {
  const auto& b = model.backbone;
  auto& gb = grads.backbone;
  const auto n = static_cast<Eigen::Index>(c.n);
  const auto d = static_cast<Eigen::Index>(model.config.d_h);

  // head
  grads.head.weight += dlogits * c.pooled.transpose();
  grads.head.bias.row(0) += dlogits.transpose();
  Eigen::VectorXd dpooled = model.head.weight.transpose() * dlogits;

  // pooler: pooled = tanh(cls * W + b) [* mask]
  if (c.pooled_mask.size() > 0) dpooled.array() *= c.pooled_mask.array();
  Eigen::VectorXd u = (c.cls * b.pool_w + b.pool_b.row(0)).array().tanh().matrix().transpose();
  Eigen::VectorXd dz = dpooled.array() * (1.0 - u.array().square());
  gb.pool_w += c.cls.transpose() * dz.transpose();
  gb.pool_b.row(0) += dz.transpose();
  Mat dh = Mat::Zero(n, d);
  dh.row(0) = (b.pool_w * dz).transpose();

  const auto heads = static_cast<Eigen::Index>(model.config.n_heads);
  const Eigen::Index dk = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  for (std::size_t li = b.layers.size(); li-- > 0;) {
    const auto& L = b.layers[li];
    auto& G = gb.layers[li];
    const auto& lc = c.layers[li];

    // out = LN2(h1 + drop(gelu(h1 W1 + b1) W2 + b2))
    Mat dr2 = layer_norm_backward(dh, lc.ln2, L.ln2_gamma, G.ln2_gamma, G.ln2_beta);
    Mat dh1 = dr2;
    Mat df2 = dr2;
    apply_mask(df2, lc.ffn_mask);
    G.w2 += lc.g.transpose() * df2;
    G.b2.row(0) += df2.colwise().sum();
    Mat dg = df2 * L.w2.transpose();
    Mat df1 = dg.array() * lc.f1.unaryExpr([](double v) { return gelu_grad(v); }).array();
    G.w1 += lc.h1.transpose() * df1;
    G.b1.row(0) += df1.colwise().sum();
    dh1 += df1 * L.w1.transpose();

    // h1 = LN1(in + drop(attn Wo + bo))
    Mat dr1 = layer_norm_backward(dh1, lc.ln1, L.ln1_gamma, G.ln1_gamma, G.ln1_beta);
    Mat din = dr1;
    Mat dout = dr1;
    apply_mask(dout, lc.attn_mask);
    G.wo += lc.attn.transpose() * dout;
    G.bo.row(0) += dout.colwise().sum();
    Mat dattn = dout * L.wo.transpose();

    Mat dq(n, d), dkm(n, d), dv(n, d);
    for (Eigen::Index hh = 0; hh < heads; ++hh) {
      const Mat& p = lc.probs[static_cast<std::size_t>(hh)];
      const auto da = dattn.middleCols(hh * dk, dk);
      Mat dp = da * lc.v.middleCols(hh * dk, dk).transpose();
      dv.middleCols(hh * dk, dk) = p.transpose() * da;
      Mat ds = dp;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double dot = (dp.row(i).array() * p.row(i).array()).sum();
        ds.row(i) = p.row(i).array() * (dp.row(i).array() - dot);
      }
      ds *= scale;
      dq.middleCols(hh * dk, dk) = ds * lc.k.middleCols(hh * dk, dk);
      dkm.middleCols(hh * dk, dk) = ds.transpose() * lc.q.middleCols(hh * dk, dk);
    }
    G.wq += lc.input.transpose() * dq;
    G.bq.row(0) += dq.colwise().sum();
    G.wk += lc.input.transpose() * dkm;
    G.bk.row(0) += dkm.colwise().sum();
    G.wv += lc.input.transpose() * dv;
    G.bv.row(0) += dv.colwise().sum();
    din += dq * L.wq.transpose() + dkm * L.wk.transpose() + dv * L.wv.transpose();
    dh = std::move(din);
  }

  apply_mask(dh, c.emb_mask);
  Mat dx = layer_norm_backward(dh, c.emb_ln, b.emb_ln_gamma, gb.emb_ln_gamma, gb.emb_ln_beta);
  gb.visual_w += c.visual_rows.transpose() * dx;
  gb.visual_b.row(0) += dx.colwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    gb.token_emb.row(c.tokens[ui]) += dx.row(i);
    gb.segment_emb.row(c.segments[ui]) += dx.row(i);
    gb.position_emb.row(c.positions[ui]) += dx.row(i);
  }
}

Eigen::Vector2d softmax2(const Eigen::Vector2d& logits) {
  const double m = logits.maxCoeff();
  Eigen::Vector2d e = (logits.array() - m).exp();
  return e / e.sum();
}

double cross_entropy(const Eigen::Vector2d& logits, int label, Eigen::Vector2d* dlogits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log(std::exp(logits(0) - m) + std::exp(logits(1) - m));
  if (dlogits) {
    *dlogits = softmax2(logits);
    (*dlogits)(label) -= 1.0;
  }
  return lse - logits(label);
}

}  // namespace memetag
