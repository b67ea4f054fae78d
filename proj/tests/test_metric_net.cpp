// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <vector>

#include "xreid/metric_net.hpp"
#include "xreid/rng.hpp"

using namespace xreid;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

RadarFrame radar_frame(Rng& rng, double t, int n_pts, double y0 = 4.0) {
  RadarFrame f;
  f.t = t;
  for (int i = 0; i < n_pts; ++i) {
    RadarPoint p;
    p.position = Vec3(rng.uniform(-0.4, 0.4), y0 + rng.uniform(-0.3, 0.3),
                      rng.uniform(-0.5, 1.0));
    p.intensity = 1.0 + rng.index(5);
    p.radial_velocity = rng.uniform(-1.5, 0.5);
    f.points.push_back(p);
  }
  return f;
}

SignatureFrame sig_frame(Rng& rng, double t, int n_pts, double y0 = 4.0) {
  SignatureFrame f;
  f.t = t;
  for (int i = 0; i < n_pts; ++i)
    f.points.push_back({Vec3(rng.uniform(-0.4, 0.4), y0 + rng.uniform(-0.3, 0.3),
                             rng.uniform(-0.5, 1.0)),
                        static_cast<BodyPart>(rng.index(6))});
  return f;
}

VectorXd axis_embedding(int axis, double scale) {
  VectorXd v = VectorXd::Zero(64);
  v[axis] = scale;
  return v;
}

// Synthetic but learnable records: each identity occupies its own spatial
// cell, so radar and signature sequences of one identity look alike.
std::vector<TrainRecord> toy_dataset(int ids, int walks, std::uint64_t seed) {
  std::vector<TrainRecord> out;
  Rng rng(seed);
  for (int id = 0; id < ids; ++id)
    for (int w = 0; w < walks; ++w) {
      TrainRecord r;
      r.identity = id;
      r.walk = w;
      double y0 = 3.0 + 0.8 * id;
      for (int t = 0; t < 5; ++t) {
        r.radar.push_back(radar_frame(rng, 0.1 * t, 4 + static_cast<int>(rng.index(3)), y0));
        r.signature.push_back(sig_frame(rng, 0.1 * t, 5 + static_cast<int>(rng.index(3)), y0));
      }
      out.push_back(std::move(r));
    }
  return out;
}

double embed_diff(const VectorXd& a, const VectorXd& b) { return (a - b).norm(); }

}  // namespace

TEST_CASE("feature assembly") {
  SUBCASE("radar rows carry position, intensity, velocity") {
    RadarFrame f;
    RadarPoint p;
    p.position = Vec3(0.1, 4.0, 0.5);
    p.intensity = 3.0;
    p.radial_velocity = -1.1;
    f.points.push_back(p);
    MatrixXd feats = radar_features(f, 64);
    REQUIRE(feats.rows() == 1);
    REQUIRE(feats.cols() == 5);
    CHECK(feats(0, 0) == 0.1);
    CHECK(feats(0, 1) == 4.0);
    CHECK(feats(0, 2) == 0.5);
    CHECK(feats(0, 3) == 3.0);
    CHECK(feats(0, 4) == -1.1);
  }
  SUBCASE("radar cap keeps the strongest points") {
    RadarFrame f;
    for (int i = 0; i < 6; ++i) {
      RadarPoint p;
      p.position = Vec3(0, 3.0 + i, 0);
      p.intensity = 1.0 + i;
      f.points.push_back(p);
    }
    MatrixXd feats = radar_features(f, 3);
    REQUIRE(feats.rows() == 3);
    std::multiset<double> kept;
    for (int r = 0; r < 3; ++r) kept.insert(feats(r, 3));
    CHECK(kept == std::multiset<double>{4.0, 5.0, 6.0});
  }
  SUBCASE("signature rows carry position and a one-hot part") {
    MatrixXd feats =
        signature_features({{Vec3(1.0, 2.0, 3.0), BodyPart::RightArm}}, 256);
    REQUIRE(feats.rows() == 1);
    REQUIRE(feats.cols() == 9);
    CHECK(feats(0, 0) == 1.0);
    CHECK(feats(0, 3 + 3) == 1.0);  // RightArm one-hot slot
    CHECK(feats.row(0).segment(3, 6).sum() == 1.0);
  }
  SUBCASE("signature cap subsamples uniformly") {
    std::vector<LabeledPoint> pts;
    for (int i = 0; i < 10; ++i) pts.push_back({Vec3(i, 0, 0), BodyPart::Torso});
    MatrixXd feats = signature_features(pts, 4);
    REQUIRE(feats.rows() == 4);
    std::set<double> xs;
    for (int r = 0; r < 4; ++r) xs.insert(feats(r, 0));
    CHECK(xs.size() == 4);  // distinct source points
    for (double x : xs) CHECK(x == std::floor(x));
  }
  SUBCASE("empty frames are dropped from sequences") {
    Rng rng(4);
    std::vector<RadarFrame> frames = {radar_frame(rng, 0.0, 3), RadarFrame{0.1, {}},
                                      radar_frame(rng, 0.2, 2)};
    CHECK(radar_seq_features(frames, 64).size() == 2);
  }
}

TEST_CASE("encoder basics and invariances") {
  ModelConfig mc;
  ModelParams params = init_params(mc, 5);
  Rng rng(9);
  std::vector<RadarFrame> radar;
  std::vector<SignatureFrame> sig;
  for (int t = 0; t < 6; ++t) {
    radar.push_back(radar_frame(rng, 0.1 * t, 5));
    sig.push_back(sig_frame(rng, 0.1 * t, 7));
  }

  SUBCASE("embeddings have the configured width and are deterministic") {
    VectorXd e1 = encode_radar(radar, params);
    VectorXd e2 = encode_radar(radar, params);
    CHECK(e1.size() == 64);
    CHECK(embed_diff(e1, e2) == 0.0);
    VectorXd s1 = encode_signature(sig, params);
    CHECK(s1.size() == 64);
  }
  SUBCASE("point order within a frame does not matter") {
    for (bool attention : {true, false}) {
      ModelConfig cfg;
      cfg.use_attention = attention;
      ModelParams p2 = init_params(cfg, 5);
      VectorXd base = encode_radar(radar, p2);
      std::vector<RadarFrame> shuffled = radar;
      for (RadarFrame& f : shuffled) std::reverse(f.points.begin(), f.points.end());
      CHECK(embed_diff(encode_radar(shuffled, p2), base) < 1e-12);
    }
  }
  SUBCASE("frame order matters through the recurrence") {
    std::vector<RadarFrame> reversed(radar.rbegin(), radar.rend());
    CHECK(embed_diff(encode_radar(reversed, params), encode_radar(radar, params)) > 1e-6);
  }
  SUBCASE("interleaved empty frames do not change the embedding") {
    std::vector<RadarFrame> padded;
    padded.push_back(RadarFrame{-0.1, {}});
    for (const RadarFrame& f : radar) padded.push_back(f);
    padded.insert(padded.begin() + 3, RadarFrame{0.15, {}});
    CHECK(embed_diff(encode_radar(padded, params), encode_radar(radar, params)) == 0.0);
  }
  SUBCASE("an all-empty sequence is rejected") {
    std::vector<RadarFrame> empty(4);
    CHECK_THROWS_AS(encode_radar(empty, params), Error);
  }
  SUBCASE("similarity is negative euclidean distance") {
    VectorXd a = axis_embedding(0, 1.0);
    VectorXd b = axis_embedding(1, 1.0);
    CHECK(similarity(a, a) == 0.0);
    CHECK(similarity(a, b) == doctest::Approx(-std::sqrt(2.0)));
  }
  SUBCASE("separate temporal cores change the signature path only") {
    ModelConfig split = mc;
    split.share_lstm = false;
    ModelParams ps = init_params(split, 5);
    REQUIRE(!ps.lstm_sig.empty());
    // radar path ignores the signature core
    ps.lstm_sig[0].Wx.setZero();
    CHECK_NOTHROW(encode_radar(radar, ps));
    CHECK_NOTHROW(encode_signature(sig, ps));
  }
}

TEST_CASE("batched encoder agrees with the single-sequence path") {
  for (bool attention : {true, false}) {
    CAPTURE(attention);
    ModelConfig mc;
    mc.use_attention = attention;
    ModelParams params = init_params(mc, 11);
    Rng rng(12);
    std::vector<std::vector<RadarFrame>> seqs;
    for (int b = 0; b < 3; ++b) {
      std::vector<RadarFrame> s;
      for (int t = 0; t < 4; ++t) s.push_back(radar_frame(rng, 0.1 * t, 3 + b));
      seqs.push_back(std::move(s));
    }
    std::vector<std::vector<MatrixXd>> feats;
    for (const auto& s : seqs) feats.push_back(radar_seq_features(s, mc.radar_point_cap));
    SeqEncoder enc(Branch::Radar, params);
    MatrixXd G = enc.forward(feats);
    REQUIRE(G.cols() == 3);
    for (int b = 0; b < 3; ++b)
      CHECK((G.col(b) - encode_radar(seqs[b], params)).norm() < 1e-12);
  }
}

TEST_CASE("loss values match hand-computed cases") {
  VectorXd a = VectorXd::Zero(64);
  SUBCASE("triplet inactive when the margin is satisfied") {
    TripletGrad g = triplet_loss(a, axis_embedding(0, 0.1), axis_embedding(1, 0.5), 0.3);
    CHECK(g.loss == 0.0);
    CHECK(g.da.norm() == 0.0);
    CHECK(g.dp.norm() == 0.0);
    CHECK(g.dn.norm() == 0.0);
  }
  SUBCASE("triplet active case") {
    TripletGrad g = triplet_loss(a, axis_embedding(0, 0.5), axis_embedding(1, 0.2), 0.3);
    CHECK(g.loss == doctest::Approx(0.6));  // 0.5 - 0.2 + 0.3
    CHECK(g.dp[0] == doctest::Approx(1.0));    // d||a-p||/dp at p = 0.5 e0
    CHECK(g.dn[1] == doctest::Approx(-1.0));   // moving n outward reduces loss
    CHECK((g.da - (-g.dp - g.dn)).norm() < 1e-12);
  }
  SUBCASE("contrastive same pair is squared distance") {
    PairGrad g = contrastive_loss(a, axis_embedding(0, 0.2), true, 0.3);
    CHECK(g.loss == doctest::Approx(0.04));
    CHECK(g.db[0] == doctest::Approx(0.4));  // 2 d
  }
  SUBCASE("contrastive different pair hinges at the margin") {
    PairGrad close = contrastive_loss(a, axis_embedding(0, 0.2), false, 0.3);
    CHECK(close.loss == doctest::Approx(0.01));  // (0.3 - 0.2)^2
    PairGrad far = contrastive_loss(a, axis_embedding(0, 0.5), false, 0.3);
    CHECK(far.loss == 0.0);
    CHECK(far.da.norm() == 0.0);
  }
  SUBCASE("loss gradients match finite differences directly") {
    Rng rng(31);
    for (int trial = 0; trial < 5; ++trial) {
      VectorXd x(6), p(6), n(6);
      for (int i = 0; i < 6; ++i) {
        x[i] = rng.gauss();
        p[i] = rng.gauss();
        n[i] = rng.gauss();
      }
      TripletGrad g = triplet_loss(x, p, n, 5.0);  // margin keeps the hinge active
      const double h = 1e-6;
      for (int i = 0; i < 6; ++i) {
        VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        double fd = (triplet_loss(xp, p, n, 5.0).loss - triplet_loss(xm, p, n, 5.0).loss) /
                    (2.0 * h);
        CHECK(std::abs(fd - g.da[i]) < 1e-6 * std::max(1.0, std::abs(fd)));
      }
      bool same = rng.uniform() < 0.5;
      PairGrad pg = contrastive_loss(x, p, same, 5.0);
      for (int i = 0; i < 6; ++i) {
        VectorXd pp = p, pm = p;
        pp[i] += h;
        pm[i] -= h;
        double fd = (contrastive_loss(x, pp, same, 5.0).loss -
                     contrastive_loss(x, pm, same, 5.0).loss) /
                    (2.0 * h);
        CHECK(std::abs(fd - pg.db[i]) < 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("analytic gradients match central finite differences through the network") {
  // covers both branches, both pooling modes, shared and split temporal cores
  int checked_instances = 0;
  for (int inst = 0; inst < 6; ++inst) {
    ModelConfig mc;
    mc.mlp_widths = {3, 4};
    mc.hidden = 4;
    mc.lstm_layers = 2;
    mc.radar_point_cap = 8;
    mc.sig_point_cap = 8;
    mc.use_attention = (inst % 2 == 0);
    mc.share_lstm = (inst % 3 != 0);
    ModelParams params = init_params(mc, 100 + inst);

    Rng rng(200 + inst);
    // non-trivial frozen statistics so the standardisation path is exercised
    for (MlpBranch* mlp : {&params.radar_mlp, &params.sig_mlp})
      for (NormStats& s : mlp->stats) {
        for (int i = 0; i < s.mean.size(); ++i) {
          s.mean[i] = 0.3 * rng.gauss();
          s.var[i] = rng.uniform(0.5, 2.0);
        }
      }

    const int T = 3;
    std::vector<std::vector<MatrixXd>> radar_seqs(2), sig_seqs(2);
    for (int b = 0; b < 2; ++b)
      for (int t = 0; t < T; ++t) {
        MatrixXd r(2 + static_cast<int>(rng.index(2)), 5);
        for (int i = 0; i < r.size(); ++i) r.data()[i] = rng.gauss();
        radar_seqs[b].push_back(r);
        MatrixXd s(2 + static_cast<int>(rng.index(2)), 9);
        for (int i = 0; i < s.size(); ++i) s.data()[i] = rng.gauss();
        sig_seqs[b].push_back(s);
      }

    // composite loss touching triplet and contrastive paths
    auto loss_value = [&]() {
      SeqEncoder er(Branch::Radar, params), es(Branch::Signature, params);
      MatrixXd R = er.forward(radar_seqs);
      MatrixXd S = es.forward(sig_seqs);
      double l = triplet_loss(R.col(0), S.col(0), S.col(1), 5.0).loss;
      l += 0.7 * contrastive_loss(R.col(0), S.col(0), true, 5.0).loss;
      l += 1.3 * contrastive_loss(R.col(1), S.col(1), false, 5.0).loss;
      return l;
    };

    ModelParams grads = zero_like(params);
    {
      SeqEncoder er(Branch::Radar, params), es(Branch::Signature, params);
      MatrixXd R = er.forward(radar_seqs);
      MatrixXd S = es.forward(sig_seqs);
      TripletGrad tg = triplet_loss(R.col(0), S.col(0), S.col(1), 5.0);
      PairGrad cs = contrastive_loss(R.col(0), S.col(0), true, 5.0);
      PairGrad cd = contrastive_loss(R.col(1), S.col(1), false, 5.0);
      REQUIRE(tg.loss > 1e-3);  // hinge safely active, no kink near the probe
      MatrixXd dR = MatrixXd::Zero(4, 2), dS = MatrixXd::Zero(4, 2);
      dR.col(0) = tg.da + 0.7 * cs.da;
      dR.col(1) = 1.3 * cd.da;
      dS.col(0) = tg.dp + 0.7 * cs.db;
      dS.col(1) = tg.dn + 1.3 * cd.db;
      er.backward(dR, grads);
      es.backward(dS, grads);
    }

    auto pv = param_views(params, false);
    auto gv = param_views(grads, false);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t v = 0; v < pv.size(); ++v) {
      for (int k = 0; k < pv[v].size(); ++k) {
        double keep = pv[v].data[k];
        pv[v].data[k] = keep + h;
        double lp = loss_value();
        pv[v].data[k] = keep - h;
        double lm = loss_value();
        pv[v].data[k] = keep;
        double fd = (lp - lm) / (2.0 * h);
        double an = gv[v].data[k];
        double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
        worst = std::max(worst, rel);
        if (rel >= 1e-4) {
          CAPTURE(pv[v].name);
          CAPTURE(k);
          CHECK(rel < 1e-4);
        }
      }
    }
    CHECK(worst < 1e-4);
    ++checked_instances;
  }
  CHECK(checked_instances == 6);
}

TEST_CASE("training learns a separable toy problem") {
  std::vector<TrainRecord> data = toy_dataset(3, 4, 77);
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.seed = 5;
  cfg.log_every = 0;
  TrainResult res = train(data, cfg);
  REQUIRE(static_cast<int>(res.loss_trace.size()) == cfg.epochs);
  double early = 0.0, late = 0.0;
  for (int i = 0; i < 50; ++i) early += res.loss_trace[i] / 50.0;
  for (int i = cfg.epochs - 50; i < cfg.epochs; ++i) late += res.loss_trace[i] / 50.0;
  CHECK(late < 0.05);
  CHECK(late < early);

  // the learned space separates identities: same-identity embedding pairs sit
  // closer than cross-identity pairs on held-in records
  VectorXd r0 = encode_radar(data[0].radar, res.params);
  VectorXd s0 = encode_signature(data[1].signature, res.params);   // same identity 0
  VectorXd s1 = encode_signature(data[5].signature, res.params);   // identity 1
  CHECK(similarity(r0, s0) > similarity(r0, s1));
}

TEST_CASE("training rejects degenerate datasets") {
  SUBCASE("single identity") {
    std::vector<TrainRecord> data = toy_dataset(1, 4, 3);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.log_every = 0;
    CHECK_THROWS_AS(train(data, cfg), Error);
  }
  SUBCASE("record with no usable frames") {
    std::vector<TrainRecord> data = toy_dataset(2, 2, 3);
    data[1].radar.clear();
    data[1].radar.push_back(RadarFrame{0.0, {}});
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.log_every = 0;
    CHECK_THROWS_AS(train(data, cfg), Error);
  }
}

TEST_CASE("training is deterministic in the seed") {
  std::vector<TrainRecord> data = toy_dataset(2, 3, 11);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 9;
  cfg.log_every = 0;
  TrainResult a = train(data, cfg);
  TrainResult b = train(data, cfg);
  REQUIRE(a.loss_trace.size() == b.loss_trace.size());
  for (std::size_t i = 0; i < a.loss_trace.size(); ++i)
    CHECK(a.loss_trace[i] == b.loss_trace[i]);
  auto av = param_views(a.params, true);
  auto bv = param_views(b.params, true);
  REQUIRE(av.size() == bv.size());
  bool identical = true;
  for (std::size_t v = 0; v < av.size(); ++v)
    for (int k = 0; k < av[v].size(); ++k)
      identical = identical && av[v].data[k] == bv[v].data[k];
  CHECK(identical);

  cfg.seed = 10;
  TrainResult c = train(data, cfg);
  CHECK(a.loss_trace.back() != c.loss_trace.back());
}

TEST_CASE("ablation configurations train") {
  std::vector<TrainRecord> data = toy_dataset(2, 3, 13);
  for (Ablation ab : {Ablation::NoAtt, Ablation::NoTL}) {
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.ablation = ab;
    cfg.log_every = 0;
    TrainResult res = train(data, cfg);
    CHECK(res.loss_trace.size() == 10);
    CHECK(res.params.cfg.use_attention == (ab != Ablation::NoAtt));
  }
  CHECK(ablation_from_string("noST") == Ablation::NoST);
  CHECK(ablation_from_string("full") == Ablation::Full);
  CHECK_THROWS_AS(ablation_from_string("bogus"), Error);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  ModelConfig mc;
  mc.share_lstm = false;  // exercise the optional tensors
  ModelParams params = init_params(mc, 21);
  // non-default stats so they must survive the round trip
  params.radar_mlp.stats[0].mean.setConstant(0.25);
  params.radar_mlp.stats[0].var.setConstant(1.5);

  std::string path = "ckpt_roundtrip_test.json";
  save_checkpoint(params, path);
  ModelParams loaded = load_checkpoint(path);

  auto a = param_views(params, true);
  auto b = param_views(loaded, true);
  REQUIRE(a.size() == b.size());
  for (std::size_t v = 0; v < a.size(); ++v) {
    REQUIRE(a[v].size() == b[v].size());
    for (int k = 0; k < a[v].size(); ++k) CHECK(a[v].data[k] == b[v].data[k]);
  }
  CHECK(loaded.cfg.share_lstm == false);
  CHECK(loaded.cfg.mlp_widths == mc.mlp_widths);

  Rng rng(33);
  std::vector<RadarFrame> probe;
  for (int t = 0; t < 5; ++t) probe.push_back(radar_frame(rng, 0.1 * t, 4));
  CHECK(embed_diff(encode_radar(probe, params), encode_radar(probe, loaded)) == 0.0);

  CHECK_THROWS_AS(load_checkpoint("does_not_exist.json"), Error);
  std::remove(path.c_str());
}
