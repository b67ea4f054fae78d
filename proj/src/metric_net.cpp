// SPDX-License-Identifier: Apache-2.0
#include "xreid/metric_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xreid/rng.hpp"

namespace xreid {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Ablation ablation_from_string(const std::string& s) {
  if (s == "full") return Ablation::Full;
  if (s == "noST") return Ablation::NoST;
  if (s == "noAtt") return Ablation::NoAtt;
  if (s == "noTL") return Ablation::NoTL;
  fail(Err::ConfigError, "unknown ablation '" + s + "'");
}

const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoST: return "noST";
    case Ablation::NoAtt: return "noAtt";
    case Ablation::NoTL: return "noTL";
  }
  return "?";
}

// ================================ parameters =================================

namespace {

Affine make_affine(int out, int in) {
  Affine a;
  a.W = MatrixXd::Zero(out, in);
  a.b = VectorXd::Zero(out);
  return a;
}

void init_affine(Affine& a, Rng& rng) {
  double s = 1.0 / std::sqrt(static_cast<double>(a.W.cols()));
  for (int r = 0; r < a.W.rows(); ++r)
    for (int c = 0; c < a.W.cols(); ++c) a.W(r, c) = rng.uniform(-s, s);
  a.b.setZero();
}

MlpBranch make_mlp(int in, const std::vector<int>& widths) {
  MlpBranch m;
  int prev = in;
  for (int w : widths) {
    m.layers.push_back(make_affine(w, prev));
    NormStats st;
    st.mean = VectorXd::Zero(w);
    st.var = VectorXd::Ones(w);
    m.stats.push_back(st);
    prev = w;
  }
  return m;
}

LstmLayer make_lstm(int hidden) {
  LstmLayer l;
  l.Wx = MatrixXd::Zero(4 * hidden, hidden);
  l.Wh = MatrixXd::Zero(4 * hidden, hidden);
  l.b = VectorXd::Zero(4 * hidden);
  return l;
}

void init_lstm(LstmLayer& l, Rng& rng) {
  double s = 1.0 / std::sqrt(static_cast<double>(l.Wx.cols()));
  for (int r = 0; r < l.Wx.rows(); ++r)
    for (int c = 0; c < l.Wx.cols(); ++c) l.Wx(r, c) = rng.uniform(-s, s);
  for (int r = 0; r < l.Wh.rows(); ++r)
    for (int c = 0; c < l.Wh.cols(); ++c) l.Wh(r, c) = rng.uniform(-s, s);
  l.b.setZero();
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  require(cfg.mlp_widths.back() == cfg.hidden, Err::InvalidParams,
          "last MLP width must match the hidden size");
  ModelParams p;
  p.cfg = cfg;
  p.radar_mlp = make_mlp(cfg.radar_in, cfg.mlp_widths);
  p.sig_mlp = make_mlp(cfg.sig_in, cfg.mlp_widths);
  p.point_attn_radar = make_affine(1, cfg.hidden);
  p.point_attn_sig = make_affine(1, cfg.hidden);
  for (int l = 0; l < cfg.lstm_layers; ++l) p.lstm.push_back(make_lstm(cfg.hidden));
  p.frame_attn = make_affine(1, cfg.hidden);
  if (!cfg.share_lstm) {
    for (int l = 0; l < cfg.lstm_layers; ++l) p.lstm_sig.push_back(make_lstm(cfg.hidden));
    p.frame_attn_sig = make_affine(1, cfg.hidden);
  }

  Rng rng(mix_seed(seed, 0x11172ULL));
  for (Affine& a : p.radar_mlp.layers) init_affine(a, rng);
  for (Affine& a : p.sig_mlp.layers) init_affine(a, rng);
  init_affine(p.point_attn_radar, rng);
  init_affine(p.point_attn_sig, rng);
  for (LstmLayer& l : p.lstm) init_lstm(l, rng);
  init_affine(p.frame_attn, rng);
  for (LstmLayer& l : p.lstm_sig) init_lstm(l, rng);
  if (!cfg.share_lstm) init_affine(p.frame_attn_sig, rng);
  return p;
}

ModelParams zero_like(const ModelParams& p) {
  ModelParams z = p;
  auto views = param_views(z, true);
  for (auto& v : views) std::fill(v.data, v.data + v.size(), 0.0);
  return z;
}

std::vector<TensorView> param_views(ModelParams& p, bool include_stats) {
  std::vector<TensorView> out;
  auto add_m = [&](const std::string& name, MatrixXd& m) {
    out.push_back({name, m.data(), static_cast<int>(m.rows()), static_cast<int>(m.cols())});
  };
  auto add_v = [&](const std::string& name, VectorXd& v) {
    out.push_back({name, v.data(), static_cast<int>(v.size()), 1});
  };
  auto add_mlp = [&](const std::string& prefix, MlpBranch& m) {
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      add_m(prefix + "." + std::to_string(l) + ".w", m.layers[l].W);
      add_v(prefix + "." + std::to_string(l) + ".b", m.layers[l].b);
      if (include_stats) {
        add_v(prefix + "." + std::to_string(l) + ".mean", m.stats[l].mean);
        add_v(prefix + "." + std::to_string(l) + ".var", m.stats[l].var);
      }
    }
  };
  add_mlp("radar_mlp", p.radar_mlp);
  add_mlp("sig_mlp", p.sig_mlp);
  add_m("point_attn_radar.w", p.point_attn_radar.W);
  add_v("point_attn_radar.b", p.point_attn_radar.b);
  add_m("point_attn_sig.w", p.point_attn_sig.W);
  add_v("point_attn_sig.b", p.point_attn_sig.b);
  for (std::size_t l = 0; l < p.lstm.size(); ++l) {
    add_m("lstm." + std::to_string(l) + ".wx", p.lstm[l].Wx);
    add_m("lstm." + std::to_string(l) + ".wh", p.lstm[l].Wh);
    add_v("lstm." + std::to_string(l) + ".b", p.lstm[l].b);
  }
  add_m("frame_attn.w", p.frame_attn.W);
  add_v("frame_attn.b", p.frame_attn.b);
  for (std::size_t l = 0; l < p.lstm_sig.size(); ++l) {
    add_m("lstm_sig." + std::to_string(l) + ".wx", p.lstm_sig[l].Wx);
    add_m("lstm_sig." + std::to_string(l) + ".wh", p.lstm_sig[l].Wh);
    add_v("lstm_sig." + std::to_string(l) + ".b", p.lstm_sig[l].b);
  }
  if (!p.cfg.share_lstm) {
    add_m("frame_attn_sig.w", p.frame_attn_sig.W);
    add_v("frame_attn_sig.b", p.frame_attn_sig.b);
  }
  return out;
}

// ============================ feature assembly ===============================

MatrixXd radar_features(const RadarFrame& f, int cap) {
  int n = static_cast<int>(f.points.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (n > cap) {
    // keep the cap highest-intensity points, original order preserved
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return f.points[a].intensity > f.points[b].intensity;
    });
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
  }
  MatrixXd X(static_cast<int>(idx.size()), 5);
  for (int r = 0; r < X.rows(); ++r) {
    const RadarPoint& p = f.points[idx[r]];
    X(r, 0) = p.position.x();
    X(r, 1) = p.position.y();
    X(r, 2) = p.position.z();
    X(r, 3) = p.intensity;
    X(r, 4) = p.radial_velocity;
  }
  return X;
}

MatrixXd signature_features(const std::vector<LabeledPoint>& pts, int cap) {
  int n = static_cast<int>(pts.size());
  std::vector<int> idx;
  if (n > cap) {
    idx.reserve(cap);
    for (int i = 0; i < cap; ++i)
      idx.push_back(static_cast<int>(static_cast<long long>(i) * n / cap));
  } else {
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), 0);
  }
  MatrixXd X = MatrixXd::Zero(static_cast<int>(idx.size()), 3 + kNumBodyParts);
  for (int r = 0; r < X.rows(); ++r) {
    const LabeledPoint& p = pts[idx[r]];
    X(r, 0) = p.position.x();
    X(r, 1) = p.position.y();
    X(r, 2) = p.position.z();
    X(r, 3 + static_cast<int>(p.part)) = 1.0;
  }
  return X;
}

std::vector<MatrixXd> radar_seq_features(const std::vector<RadarFrame>& frames, int cap) {
  std::vector<MatrixXd> out;
  for (const RadarFrame& f : frames)
    if (!f.points.empty()) out.push_back(radar_features(f, cap));
  return out;
}

std::vector<MatrixXd> signature_seq_features(const std::vector<SignatureFrame>& frames,
                                             int cap) {
  std::vector<MatrixXd> out;
  for (const SignatureFrame& f : frames)
    if (!f.points.empty()) out.push_back(signature_features(f.points, cap));
  return out;
}

// ========================== batched encode/backward ==========================

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

struct SeqEncoder::Impl {
  int L = 0, B = 0;
  const MlpBranch* mlp = nullptr;
  const Affine* pt_attn = nullptr;
  const std::vector<LstmLayer>* lstm = nullptr;
  const Affine* fr_attn = nullptr;
  bool use_attention = true;
  double bn_eps = 1e-6;

  // MLP caches: activations per layer, rows = all points of all (b, t) frames
  std::vector<MatrixXd> acts;            // acts[0] = input, acts[l+1] = layer l output
  std::vector<int> frame_row0, frame_n;  // row spans, frame index = b * L + t
  std::vector<VectorXd> alphas;          // point attention weights per frame
  std::vector<std::vector<int>> argmax_pts;  // pooling ablation

  // LSTM caches, [layer][t], 64 x B each
  std::vector<std::vector<MatrixXd>> xs, is, fs, gs, os, cs, hs;
  std::vector<VectorXd> alpha2;              // frame attention weights per sequence
  std::vector<std::vector<int>> argmax_frames;
  MatrixXd G;
};

SeqEncoder::SeqEncoder(Branch branch, const ModelParams& params)
    : branch_(branch), p_(params), im_(std::make_shared<Impl>()) {
  im_->mlp = (branch == Branch::Radar) ? &params.radar_mlp : &params.sig_mlp;
  im_->pt_attn = (branch == Branch::Radar) ? &params.point_attn_radar : &params.point_attn_sig;
  bool shared = params.cfg.share_lstm;
  im_->lstm = (branch == Branch::Radar || shared) ? &params.lstm : &params.lstm_sig;
  im_->fr_attn = (branch == Branch::Radar || shared) ? &params.frame_attn : &params.frame_attn_sig;
  im_->use_attention = params.cfg.use_attention;
  im_->bn_eps = params.cfg.bn_eps;
}

MatrixXd SeqEncoder::forward(const std::vector<std::vector<MatrixXd>>& seqs) {
  Impl& im = *im_;
  im.B = static_cast<int>(seqs.size());
  require(im.B >= 1, Err::EmptySequence, "no sequences to encode");
  im.L = static_cast<int>(seqs[0].size());
  require(im.L >= 1, Err::EmptySequence, "sequence has no non-empty frames");
  const int in_dim = (branch_ == Branch::Radar) ? p_.cfg.radar_in : p_.cfg.sig_in;
  const int H = p_.cfg.hidden;

  long total_rows = 0;
  for (const auto& s : seqs) {
    require(static_cast<int>(s.size()) == im.L, Err::ShapeMismatch,
            "all sequences in a batch must share the frame count");
    for (const MatrixXd& f : s) {
      require(f.rows() >= 1, Err::EmptyFrame, "empty frame reached the encoder");
      require(f.cols() == in_dim, Err::ShapeMismatch, "bad feature width");
      total_rows += f.rows();
    }
  }

  im.frame_row0.assign(static_cast<std::size_t>(im.B) * im.L, 0);
  im.frame_n.assign(static_cast<std::size_t>(im.B) * im.L, 0);
  MatrixXd X(total_rows, in_dim);
  long row = 0;
  for (int b = 0; b < im.B; ++b)
    for (int t = 0; t < im.L; ++t) {
      const MatrixXd& f = seqs[b][t];
      im.frame_row0[static_cast<std::size_t>(b) * im.L + t] = static_cast<int>(row);
      im.frame_n[static_cast<std::size_t>(b) * im.L + t] = static_cast<int>(f.rows());
      X.middleRows(row, f.rows()) = f;
      row += f.rows();
    }

  // point MLP over every point at once
  const MlpBranch& mlp = *im.mlp;
  im.acts.assign(1, std::move(X));
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const Affine& a = mlp.layers[l];
    MatrixXd Z = (im.acts.back() * a.W.transpose()).rowwise() + a.b.transpose();
    Eigen::ArrayXd inv_s = (mlp.stats[l].var.array() + im.bn_eps).sqrt().inverse();
    Z = ((Z.rowwise() - mlp.stats[l].mean.transpose()).array().rowwise() *
         inv_s.transpose())
            .matrix();
    im.acts.push_back(Z.cwiseMax(0.0));
  }
  const MatrixXd& A = im.acts.back();  // total_rows x 64

  // pool points into frame features
  im.alphas.assign(im.frame_row0.size(), VectorXd());
  im.argmax_pts.assign(im.frame_row0.size(), {});
  im.xs.assign(1, std::vector<MatrixXd>(im.L, MatrixXd(H, im.B)));
  for (int b = 0; b < im.B; ++b)
    for (int t = 0; t < im.L; ++t) {
      std::size_t fi = static_cast<std::size_t>(b) * im.L + t;
      auto block = A.middleRows(im.frame_row0[fi], im.frame_n[fi]);
      if (im.use_attention) {
        VectorXd u = block * im.pt_attn->W.transpose().col(0);
        u.array() += im.pt_attn->b(0);
        u.array() -= u.maxCoeff();
        VectorXd al = u.array().exp();
        al /= al.sum();
        im.xs[0][t].col(b) = block.transpose() * al;
        im.alphas[fi] = std::move(al);
      } else {
        std::vector<int>& am = im.argmax_pts[fi];
        am.assign(H, 0);
        for (int k = 0; k < H; ++k) {
          int best = 0;
          block.col(k).maxCoeff(&best);
          am[k] = best;
          im.xs[0][t](k, b) = block(best, k);
        }
      }
    }

  // stacked LSTM
  const auto& lstm = *im.lstm;
  const int NL = static_cast<int>(lstm.size());
  im.is.assign(NL, {});
  im.fs.assign(NL, {});
  im.gs.assign(NL, {});
  im.os.assign(NL, {});
  im.cs.assign(NL, {});
  im.hs.assign(NL, {});
  for (int l = 0; l < NL; ++l) {
    const LstmLayer& ly = lstm[l];
    MatrixXd h = MatrixXd::Zero(H, im.B), c = MatrixXd::Zero(H, im.B);
    auto& src = (l == 0) ? im.xs[0] : im.hs[l - 1];
    for (int t = 0; t < im.L; ++t) {
      MatrixXd z = ly.Wx * src[t] + ly.Wh * h;
      z.colwise() += ly.b;
      MatrixXd ig(H, im.B), fg(H, im.B), gg(H, im.B), og(H, im.B);
      for (int bcol = 0; bcol < im.B; ++bcol)
        for (int k = 0; k < H; ++k) {
          ig(k, bcol) = sigmoid(z(k, bcol));
          fg(k, bcol) = sigmoid(z(H + k, bcol));
          gg(k, bcol) = std::tanh(z(2 * H + k, bcol));
          og(k, bcol) = sigmoid(z(3 * H + k, bcol));
        }
      c = fg.cwiseProduct(c) + ig.cwiseProduct(gg);
      h = og.cwiseProduct(c.array().tanh().matrix());
      im.is[l].push_back(ig);
      im.fs[l].push_back(fg);
      im.gs[l].push_back(gg);
      im.os[l].push_back(og);
      im.cs[l].push_back(c);
      im.hs[l].push_back(h);
    }
  }

  // pool frames into the embedding
  const auto& top = im.hs[NL - 1];
  im.alpha2.assign(im.B, VectorXd());
  im.argmax_frames.assign(im.B, {});
  im.G = MatrixXd::Zero(H, im.B);
  for (int b = 0; b < im.B; ++b) {
    if (im.use_attention) {
      VectorXd u(im.L);
      for (int t = 0; t < im.L; ++t)
        u(t) = im.fr_attn->W.row(0).dot(top[t].col(b)) + im.fr_attn->b(0);
      u.array() -= u.maxCoeff();
      VectorXd al = u.array().exp();
      al /= al.sum();
      for (int t = 0; t < im.L; ++t) im.G.col(b) += al(t) * top[t].col(b);
      im.alpha2[b] = std::move(al);
    } else {
      std::vector<int>& am = im.argmax_frames[b];
      am.assign(H, 0);
      for (int k = 0; k < H; ++k) {
        double best = top[0](k, b);
        int bt = 0;
        for (int t = 1; t < im.L; ++t)
          if (top[t](k, b) > best) {
            best = top[t](k, b);
            bt = t;
          }
        am[k] = bt;
        im.G(k, b) = best;
      }
    }
  }
  return im.G;
}

void SeqEncoder::backward(const MatrixXd& dG, ModelParams& grads) {
  Impl& im = *im_;
  const int H = p_.cfg.hidden;
  require(dG.rows() == H && dG.cols() == im.B, Err::ShapeMismatch, "bad embedding gradient");

  MlpBranch& g_mlp = (branch_ == Branch::Radar) ? grads.radar_mlp : grads.sig_mlp;
  Affine& g_pt = (branch_ == Branch::Radar) ? grads.point_attn_radar : grads.point_attn_sig;
  bool shared = p_.cfg.share_lstm;
  auto& g_lstm = (branch_ == Branch::Radar || shared) ? grads.lstm : grads.lstm_sig;
  Affine& g_fr =
      (branch_ == Branch::Radar || shared) ? grads.frame_attn : grads.frame_attn_sig;

  const auto& lstm = *im.lstm;
  const int NL = static_cast<int>(lstm.size());
  const auto& top = im.hs[NL - 1];

  // frame pooling backward -> dH on the top LSTM layer
  std::vector<MatrixXd> dh_ext(im.L, MatrixXd::Zero(H, im.B));
  for (int b = 0; b < im.B; ++b) {
    if (im.use_attention) {
      const VectorXd& al = im.alpha2[b];
      VectorXd dal(im.L);
      for (int t = 0; t < im.L; ++t) dal(t) = top[t].col(b).dot(dG.col(b));
      double inner = al.dot(dal);
      VectorXd du = al.cwiseProduct((dal.array() - inner).matrix());
      for (int t = 0; t < im.L; ++t) {
        dh_ext[t].col(b) += al(t) * dG.col(b) + du(t) * im.fr_attn->W.row(0).transpose();
        g_fr.W.row(0) += du(t) * top[t].col(b).transpose();
        g_fr.b(0) += du(t);
      }
    } else {
      for (int k = 0; k < H; ++k) dh_ext[im.argmax_frames[b][k]](k, b) += dG(k, b);
    }
  }

  // BPTT, top layer down
  std::vector<MatrixXd> dx_below;
  for (int l = NL - 1; l >= 0; --l) {
    const LstmLayer& ly = lstm[l];
    LstmLayer& gl = g_lstm[l];
    auto& src = (l == 0) ? im.xs[0] : im.hs[l - 1];
    std::vector<MatrixXd> dx(im.L, MatrixXd::Zero(H, im.B));
    MatrixXd dh = MatrixXd::Zero(H, im.B), dc = MatrixXd::Zero(H, im.B);
    for (int t = im.L - 1; t >= 0; --t) {
      dh += dh_ext[t];
      if (l < NL - 1) dh += dx_below[t];
      const MatrixXd& ig = im.is[l][t];
      const MatrixXd& fg = im.fs[l][t];
      const MatrixXd& gg = im.gs[l][t];
      const MatrixXd& og = im.os[l][t];
      const MatrixXd& c = im.cs[l][t];
      MatrixXd tau = c.array().tanh().matrix();
      MatrixXd dcc = dc + dh.cwiseProduct(og).cwiseProduct(
                              (1.0 - tau.array().square()).matrix());
      MatrixXd c_prev = (t > 0) ? im.cs[l][t - 1] : MatrixXd::Zero(H, im.B);
      MatrixXd dz(4 * H, im.B);
      dz.topRows(H) = dcc.cwiseProduct(gg).cwiseProduct(
          ig.cwiseProduct((1.0 - ig.array()).matrix()));
      dz.middleRows(H, H) = dcc.cwiseProduct(c_prev).cwiseProduct(
          fg.cwiseProduct((1.0 - fg.array()).matrix()));
      dz.middleRows(2 * H, H) =
          dcc.cwiseProduct(ig).cwiseProduct((1.0 - gg.array().square()).matrix());
      dz.bottomRows(H) = dh.cwiseProduct(tau).cwiseProduct(
          og.cwiseProduct((1.0 - og.array()).matrix()));

      gl.Wx += dz * src[t].transpose();
      if (t > 0) gl.Wh += dz * im.hs[l][t - 1].transpose();
      gl.b += dz.rowwise().sum();
      dx[t] = ly.Wx.transpose() * dz;
      dh = ly.Wh.transpose() * dz;
      dc = dcc.cwiseProduct(fg);
    }
    dx_below = std::move(dx);
    if (l > 0) std::fill(dh_ext.begin(), dh_ext.end(), MatrixXd::Zero(H, im.B));
  }

  // point pooling backward -> rows of the last MLP activation
  const MatrixXd& A = im.acts.back();
  MatrixXd dA = MatrixXd::Zero(A.rows(), A.cols());
  for (int b = 0; b < im.B; ++b)
    for (int t = 0; t < im.L; ++t) {
      std::size_t fi = static_cast<std::size_t>(b) * im.L + t;
      int r0 = im.frame_row0[fi], n = im.frame_n[fi];
      auto block = A.middleRows(r0, n);
      VectorXd df = dx_below[t].col(b);
      if (im.use_attention) {
        const VectorXd& al = im.alphas[fi];
        VectorXd dal = block * df;
        double inner = al.dot(dal);
        VectorXd du = al.cwiseProduct((dal.array() - inner).matrix());
        dA.middleRows(r0, n) += al * df.transpose();
        dA.middleRows(r0, n) += du * im.pt_attn->W.row(0);
        g_pt.W.row(0) += (block.transpose() * du).transpose();
        g_pt.b(0) += du.sum();
      } else {
        for (int k = 0; k < H; ++k) dA(r0 + im.argmax_pts[fi][k], k) += df(k);
      }
    }

  // MLP backward
  const MlpBranch& mlp = *im.mlp;
  MatrixXd cur = std::move(dA);
  for (int l = static_cast<int>(mlp.layers.size()) - 1; l >= 0; --l) {
    const MatrixXd& out = im.acts[l + 1];
    Eigen::ArrayXd inv_s = (mlp.stats[l].var.array() + im.bn_eps).sqrt().inverse();
    MatrixXd dZ = (cur.array() * (out.array() > 0.0).cast<double>()).matrix();
    dZ = (dZ.array().rowwise() * inv_s.transpose()).matrix();
    g_mlp.layers[l].W += dZ.transpose() * im.acts[l];
    g_mlp.layers[l].b += dZ.colwise().sum().transpose();
    if (l > 0) cur = dZ * mlp.layers[l].W;
  }
}

void SeqEncoder::collect_stats(StatAccum& acc) const {
  const Impl& im = *im_;
  const MlpBranch& mlp = *im.mlp;
  if (acc.sum.empty()) {
    acc.sum.assign(mlp.layers.size(), VectorXd());
    acc.sumsq.assign(mlp.layers.size(), VectorXd());
    acc.count.assign(mlp.layers.size(), 0);
  }
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    // recover pre-normalisation affine outputs from the cached input
    const Affine& a = mlp.layers[l];
    MatrixXd Z = (im.acts[l] * a.W.transpose()).rowwise() + a.b.transpose();
    if (acc.sum[l].size() == 0) {
      acc.sum[l] = VectorXd::Zero(Z.cols());
      acc.sumsq[l] = VectorXd::Zero(Z.cols());
    }
    acc.sum[l] += Z.colwise().sum().transpose();
    acc.sumsq[l] += Z.array().square().colwise().sum().matrix().transpose();
    acc.count[l] += Z.rows();
  }
}

// ============================= forward pieces ================================

VectorXd point_mlp(const VectorXd& features, Branch branch, const ModelParams& params) {
  const MlpBranch& mlp = (branch == Branch::Radar) ? params.radar_mlp : params.sig_mlp;
  const int in = (branch == Branch::Radar) ? params.cfg.radar_in : params.cfg.sig_in;
  require(features.size() == in, Err::ShapeMismatch, "bad point feature length");
  VectorXd a = features;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    VectorXd z = mlp.layers[l].W * a + mlp.layers[l].b;
    z = ((z - mlp.stats[l].mean).array() /
         (mlp.stats[l].var.array() + params.cfg.bn_eps).sqrt())
            .matrix();
    a = z.cwiseMax(0.0);
  }
  return a;
}

VectorXd attention_pool(const MatrixXd& feats, const Affine& attn) {
  require(feats.rows() >= 1, Err::EmptyFrame, "attention over an empty frame");
  require(feats.cols() == attn.W.cols(), Err::ShapeMismatch, "bad pooling width");
  VectorXd u = feats * attn.W.row(0).transpose();
  u.array() += attn.b(0);
  u.array() -= u.maxCoeff();
  VectorXd al = u.array().exp();
  al /= al.sum();
  return feats.transpose() * al;
}

std::vector<VectorXd> lstm_forward(const std::vector<VectorXd>& seq,
                                   const std::vector<LstmLayer>& layers) {
  require(!seq.empty(), Err::EmptySequence, "LSTM over an empty sequence");
  const int H = static_cast<int>(layers.empty() ? seq[0].size() : layers[0].Wx.cols());
  std::vector<VectorXd> cur = seq;
  for (const LstmLayer& ly : layers) {
    VectorXd h = VectorXd::Zero(H), c = VectorXd::Zero(H);
    std::vector<VectorXd> next;
    next.reserve(cur.size());
    for (const VectorXd& x : cur) {
      require(x.size() == H, Err::ShapeMismatch, "bad LSTM input width");
      VectorXd z = ly.Wx * x + ly.Wh * h + ly.b;
      VectorXd ig(H), fg(H), gg(H), og(H);
      for (int k = 0; k < H; ++k) {
        ig(k) = sigmoid(z(k));
        fg(k) = sigmoid(z(H + k));
        gg(k) = std::tanh(z(2 * H + k));
        og(k) = sigmoid(z(3 * H + k));
      }
      c = fg.cwiseProduct(c) + ig.cwiseProduct(gg);
      h = og.cwiseProduct(c.array().tanh().matrix());
      next.push_back(h);
    }
    cur = std::move(next);
  }
  return cur;
}

VectorXd sequence_attention(const std::vector<VectorXd>& hidden, const Affine& attn) {
  require(!hidden.empty(), Err::EmptySequence, "attention over an empty sequence");
  MatrixXd M(static_cast<int>(hidden.size()), hidden[0].size());
  for (std::size_t t = 0; t < hidden.size(); ++t) M.row(t) = hidden[t].transpose();
  return attention_pool(M, attn);
}

namespace {

VectorXd encode_one(const std::vector<MatrixXd>& feats, Branch branch,
                    const ModelParams& params) {
  require(!feats.empty(), Err::EmptySequence, "sequence has no non-empty frames");
  SeqEncoder enc(branch, params);
  return enc.forward({feats}).col(0);
}

}  // namespace

VectorXd encode_radar(const std::vector<RadarFrame>& frames, const ModelParams& params) {
  return encode_one(radar_seq_features(frames, params.cfg.radar_point_cap), Branch::Radar,
                    params);
}

VectorXd encode_signature(const std::vector<SignatureFrame>& frames, const ModelParams& params) {
  return encode_one(signature_seq_features(frames, params.cfg.sig_point_cap), Branch::Signature,
                    params);
}

double similarity(const VectorXd& a, const VectorXd& b) {
  require(a.size() == b.size(), Err::ShapeMismatch, "embedding sizes differ");
  return -(a - b).norm();
}

// ================================= losses ====================================

TripletGrad triplet_loss(const VectorXd& a, const VectorXd& p, const VectorXd& n,
                         double margin) {
  require(a.size() == p.size() && a.size() == n.size(), Err::ShapeMismatch,
          "embedding sizes differ");
  require(margin >= 0.0, Err::InvalidParams, "margin must be >= 0");
  TripletGrad out;
  out.da = VectorXd::Zero(a.size());
  out.dp = VectorXd::Zero(a.size());
  out.dn = VectorXd::Zero(a.size());
  double dp = (a - p).norm(), dn = (a - n).norm();
  out.loss = dp + margin - dn;
  if (out.loss <= 0.0) {
    out.loss = 0.0;
    return out;
  }
  if (dp > 1e-12) {
    out.da += (a - p) / dp;
    out.dp -= (a - p) / dp;
  }
  if (dn > 1e-12) {
    out.da -= (a - n) / dn;
    out.dn += (a - n) / dn;
  }
  return out;
}

PairGrad contrastive_loss(const VectorXd& a, const VectorXd& b, bool same, double margin) {
  require(a.size() == b.size(), Err::ShapeMismatch, "embedding sizes differ");
  require(margin >= 0.0, Err::InvalidParams, "margin must be >= 0");
  PairGrad out;
  out.da = VectorXd::Zero(a.size());
  out.db = VectorXd::Zero(a.size());
  double d = (a - b).norm();
  if (same) {
    out.loss = d * d;
    out.da = 2.0 * (a - b);
    out.db = -out.da;
  } else {
    double m = margin - d;
    if (m <= 0.0) {
      out.loss = 0.0;
    } else {
      out.loss = m * m;
      if (d > 1e-12) {
        out.da = -2.0 * m * (a - b) / d;
        out.db = -out.da;
      }
    }
  }
  return out;
}

}  // namespace xreid
