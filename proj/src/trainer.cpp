// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <map>

#include "xreid/metric_net.hpp"
#include "xreid/rng.hpp"

namespace xreid {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// set running stats from actual activations, layer by layer, so the first
// update step already sees unit-scale features
void prime_stats(MlpBranch& mlp, const std::vector<std::vector<MatrixXd>>& seqs, double bn_eps) {
  long rows = 0;
  for (const auto& s : seqs)
    for (const MatrixXd& f : s) rows += f.rows();
  if (rows == 0) return;
  const long cap = 60000;
  MatrixXd X(std::min(rows, cap), seqs[0][0].cols());
  long r = 0;
  for (const auto& s : seqs) {
    for (const MatrixXd& f : s) {
      long take = std::min<long>(f.rows(), X.rows() - r);
      if (take <= 0) break;
      X.middleRows(r, take) = f.topRows(take);
      r += take;
    }
    if (r >= X.rows()) break;
  }
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const Affine& a = mlp.layers[l];
    MatrixXd Z = (X * a.W.transpose()).rowwise() + a.b.transpose();
    VectorXd mean = Z.colwise().mean().transpose();
    VectorXd var =
        (Z.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
    mlp.stats[l].mean = mean;
    mlp.stats[l].var = var.cwiseMax(1e-8);
    Eigen::ArrayXd inv_s = (mlp.stats[l].var.array() + bn_eps).sqrt().inverse();
    X = ((Z.rowwise() - mean.transpose()).array().rowwise() * inv_s.transpose())
            .matrix()
            .cwiseMax(0.0);
  }
}

struct Job {
  Branch branch;
  int rec;
  int slot = -1;  // index in the group batch
  int group = -1;
  VectorXd embedding;
  VectorXd dG;
};

}  // namespace

TrainResult train(const std::vector<TrainRecord>& dataset, const TrainConfig& cfg) {
  require(cfg.batch_size >= 1 && cfg.epochs >= 1 && cfg.learning_rate > 0.0, Err::InvalidParams,
          "bad training configuration");
  std::map<int, std::vector<int>> by_id;
  for (int i = 0; i < static_cast<int>(dataset.size()); ++i)
    by_id[dataset[i].identity].push_back(i);
  require(by_id.size() >= 2, Err::InsufficientIdentities, "training needs >= 2 identities");

  ModelConfig mc;
  mc.use_attention = (cfg.ablation != Ablation::NoAtt);
  mc.share_lstm = cfg.share_lstm;
  ModelParams params = init_params(mc, cfg.seed);

  // per-record feature matrices, assembled once
  const int n = static_cast<int>(dataset.size());
  std::vector<std::vector<MatrixXd>> radar_feats(n), sig_feats(n);
  for (int i = 0; i < n; ++i) {
    radar_feats[i] = radar_seq_features(dataset[i].radar, mc.radar_point_cap);
    sig_feats[i] = signature_seq_features(dataset[i].signature, mc.sig_point_cap);
    require(!radar_feats[i].empty() && !sig_feats[i].empty(), Err::EmptySequence,
            "record " + std::to_string(i) + " has an empty sequence");
  }
  prime_stats(params.radar_mlp, radar_feats, mc.bn_eps);
  prime_stats(params.sig_mlp, sig_feats, mc.bn_eps);

  ModelParams m_adam = zero_like(params), v_adam = zero_like(params);
  auto pv = param_views(params, false);
  auto mv = param_views(m_adam, false);
  auto vv = param_views(v_adam, false);

  Rng rng(mix_seed(cfg.seed, 0x7e41ULL));
  auto pick_same = [&](int id) {
    const auto& lst = by_id.at(id);
    return lst[static_cast<std::size_t>(rng.index(lst.size()))];
  };
  auto pick_other = [&](int id) {
    while (true) {
      int j = static_cast<int>(rng.index(n));
      if (dataset[j].identity != id) return j;
    }
  };

  const bool pairs = (cfg.ablation == Ablation::NoTL);
  std::vector<double> trace;
  trace.reserve(cfg.epochs);
  long adam_t = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // sample the batch and deduplicate (branch, record) encoding jobs
    struct Item {
      int a, p, ng;  // job indices; ng < 0 for pairs with y = same
      bool same = false;
    };
    std::vector<Item> items;
    std::vector<Job> jobs;
    std::map<std::pair<int, int>, int> job_of;  // (branch, rec) -> job index
    auto get_job = [&](Branch br, int rec) {
      auto key = std::make_pair(static_cast<int>(br), rec);
      auto it = job_of.find(key);
      if (it != job_of.end()) return it->second;
      jobs.push_back({br, rec, -1, -1, {}, VectorXd::Zero(mc.hidden)});
      job_of[key] = static_cast<int>(jobs.size()) - 1;
      return static_cast<int>(jobs.size()) - 1;
    };
    for (int k = 0; k < cfg.batch_size; ++k) {
      int a = static_cast<int>(rng.index(n));
      int id = dataset[a].identity;
      if (pairs) {
        bool same = rng.uniform() < 0.5;
        int b = same ? pick_same(id) : pick_other(id);
        items.push_back({get_job(Branch::Radar, a), get_job(Branch::Signature, b), -1, same});
      } else {
        int p = pick_same(id);
        int g = pick_other(id);
        items.push_back(
            {get_job(Branch::Radar, a), get_job(Branch::Signature, p),
             get_job(Branch::Signature, g), false});
      }
    }

    // group by (branch, frame count) for batched encoding
    std::map<std::pair<int, int>, std::vector<int>> groups;
    for (int j = 0; j < static_cast<int>(jobs.size()); ++j) {
      const auto& feats =
          (jobs[j].branch == Branch::Radar) ? radar_feats[jobs[j].rec] : sig_feats[jobs[j].rec];
      groups[{static_cast<int>(jobs[j].branch), static_cast<int>(feats.size())}].push_back(j);
    }
    std::vector<SeqEncoder> encoders;
    std::vector<std::vector<int>> group_jobs;
    encoders.reserve(groups.size());
    for (auto& [key, idxs] : groups) {
      Branch br = static_cast<Branch>(key.first);
      std::vector<std::vector<MatrixXd>> seqs;
      seqs.reserve(idxs.size());
      for (int j : idxs)
        seqs.push_back((br == Branch::Radar) ? radar_feats[jobs[j].rec] : sig_feats[jobs[j].rec]);
      encoders.emplace_back(br, params);
      MatrixXd G = encoders.back().forward(seqs);
      for (int s = 0; s < static_cast<int>(idxs.size()); ++s) {
        jobs[idxs[s]].embedding = G.col(s);
        jobs[idxs[s]].slot = s;
        jobs[idxs[s]].group = static_cast<int>(encoders.size()) - 1;
      }
      group_jobs.push_back(idxs);
    }

    double loss_sum = 0.0;
    const double inv_b = 1.0 / static_cast<double>(cfg.batch_size);
    for (const Item& it : items) {
      if (pairs) {
        PairGrad g = contrastive_loss(jobs[it.a].embedding, jobs[it.p].embedding, it.same,
                                      cfg.margin);
        loss_sum += g.loss;
        jobs[it.a].dG += inv_b * g.da;
        jobs[it.p].dG += inv_b * g.db;
      } else {
        TripletGrad g = triplet_loss(jobs[it.a].embedding, jobs[it.p].embedding,
                                     jobs[it.ng].embedding, cfg.margin);
        loss_sum += g.loss;
        jobs[it.a].dG += inv_b * g.da;
        jobs[it.p].dG += inv_b * g.dp;
        jobs[it.ng].dG += inv_b * g.dn;
      }
    }
    trace.push_back(loss_sum * inv_b);

    ModelParams grads = zero_like(params);
    SeqEncoder::StatAccum acc_radar, acc_sig;
    for (int g = 0; g < static_cast<int>(encoders.size()); ++g) {
      MatrixXd dG(mc.hidden, static_cast<int>(group_jobs[g].size()));
      for (int s = 0; s < static_cast<int>(group_jobs[g].size()); ++s)
        dG.col(s) = jobs[group_jobs[g][s]].dG;
      encoders[g].backward(dG, grads);
      encoders[g].collect_stats(jobs[group_jobs[g][0]].branch == Branch::Radar ? acc_radar
                                                                               : acc_sig);
    }

    // Adam
    adam_t += 1;
    auto gv = param_views(grads, false);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double bc1 = 1.0 - std::pow(b1, static_cast<double>(adam_t));
    double bc2 = 1.0 - std::pow(b2, static_cast<double>(adam_t));
    for (std::size_t i = 0; i < pv.size(); ++i) {
      for (int k = 0; k < pv[i].size(); ++k) {
        double g = gv[i].data[k];
        mv[i].data[k] = b1 * mv[i].data[k] + (1.0 - b1) * g;
        vv[i].data[k] = b2 * vv[i].data[k] + (1.0 - b2) * g * g;
        pv[i].data[k] -=
            cfg.learning_rate * (mv[i].data[k] / bc1) / (std::sqrt(vv[i].data[k] / bc2) + eps);
      }
    }

    // running standardisation statistics
    auto update_stats = [&](MlpBranch& mlp, const SeqEncoder::StatAccum& acc) {
      for (std::size_t l = 0; l < mlp.stats.size() && l < acc.sum.size(); ++l) {
        if (acc.count[l] == 0) continue;
        double inv = 1.0 / static_cast<double>(acc.count[l]);
        VectorXd mean = acc.sum[l] * inv;
        VectorXd var = (acc.sumsq[l] * inv - mean.cwiseProduct(mean)).cwiseMax(1e-8);
        mlp.stats[l].mean = mc.bn_momentum * mlp.stats[l].mean + (1.0 - mc.bn_momentum) * mean;
        mlp.stats[l].var = mc.bn_momentum * mlp.stats[l].var + (1.0 - mc.bn_momentum) * var;
      }
    };
    update_stats(params.radar_mlp, acc_radar);
    update_stats(params.sig_mlp, acc_sig);

    if (cfg.log_every > 0 && ((epoch + 1) % cfg.log_every == 0 || epoch == 0))
      std::fprintf(stderr, "[train %s] epoch %d/%d mean loss %.6f\n",
                   ablation_name(cfg.ablation), epoch + 1, cfg.epochs, trace.back());
  }
  return {std::move(params), std::move(trace)};
}

}  // namespace xreid
