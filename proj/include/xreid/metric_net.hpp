// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "xreid/preprocess.hpp"
#include "xreid/radar_model.hpp"
#include "xreid/signature.hpp"
#include "xreid/types.hpp"

namespace xreid {

// row-major dense tensor, the checkpoint currency
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
};

enum class Branch { Radar, Signature };
enum class Ablation { Full, NoST, NoAtt, NoTL };

Ablation ablation_from_string(const std::string& s);
const char* ablation_name(Ablation a);

struct ModelConfig {
  int radar_in = 5;                      // (x, y, z, s, v)
  int sig_in = 3 + kNumBodyParts;        // xyz + one-hot part
  std::vector<int> mlp_widths = {12, 24, 48, 64};
  int hidden = 64;
  int lstm_layers = 3;
  int radar_point_cap = 64;              // highest-intensity clip
  int sig_point_cap = 256;               // uniform subsample clip
  bool use_attention = true;             // false under the pooling ablation
  bool share_lstm = true;                // temporal core shared across branches
  double bn_eps = 1e-6;
  double bn_momentum = 0.99;
};

struct Affine {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
};

struct NormStats {
  Eigen::VectorXd mean, var;  // running per-feature statistics
};

struct MlpBranch {
  std::vector<Affine> layers;
  std::vector<NormStats> stats;
};

struct LstmLayer {
  Eigen::MatrixXd Wx, Wh;  // 4*hidden x hidden, gate order (i, f, g, o)
  Eigen::VectorXd b;
};

struct ModelParams {
  ModelConfig cfg;
  MlpBranch radar_mlp, sig_mlp;
  Affine point_attn_radar, point_attn_sig;  // 64 -> 1 score maps
  std::vector<LstmLayer> lstm;
  Affine frame_attn;
  std::vector<LstmLayer> lstm_sig;   // populated only when !share_lstm
  Affine frame_attn_sig;
};

// weights uniform in +-1/sqrt(fan_in), biases zero, stats (0, 1)
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);
ModelParams zero_like(const ModelParams& p);

// named views over every tensor, in a fixed enumeration order
struct TensorView {
  std::string name;
  double* data;
  int rows, cols;  // cols == 1 for vectors
  int size() const { return rows * cols; }
};
std::vector<TensorView> param_views(ModelParams& p, bool include_stats);

// ============================ feature assembly ===============================

Eigen::MatrixXd radar_features(const RadarFrame& f, int cap);
Eigen::MatrixXd signature_features(const std::vector<LabeledPoint>& pts, int cap);
// per-frame feature matrices with empty frames dropped
std::vector<Eigen::MatrixXd> radar_seq_features(const std::vector<RadarFrame>& frames, int cap);
std::vector<Eigen::MatrixXd> signature_seq_features(const std::vector<SignatureFrame>& frames,
                                                    int cap);

// ============================= forward pieces ================================

// shared per-point MLP (affine + running standardisation + ReLU per layer)
Eigen::VectorXd point_mlp(const Eigen::VectorXd& features, Branch branch,
                          const ModelParams& params);

// softmax-weighted sum of rows; EmptyFrame on zero rows
Eigen::VectorXd attention_pool(const Eigen::MatrixXd& feats, const Affine& attn);

// stacked LSTM; returns the top-layer hidden state per step
std::vector<Eigen::VectorXd> lstm_forward(const std::vector<Eigen::VectorXd>& seq,
                                          const std::vector<LstmLayer>& layers);

Eigen::VectorXd sequence_attention(const std::vector<Eigen::VectorXd>& hidden,
                                   const Affine& attn);

// full branch encoders (pure functions of params + input)
Eigen::VectorXd encode_radar(const std::vector<RadarFrame>& frames, const ModelParams& params);
Eigen::VectorXd encode_signature(const std::vector<SignatureFrame>& frames,
                                 const ModelParams& params);

double similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// ================================= losses ====================================

struct TripletGrad {
  double loss;
  Eigen::VectorXd da, dp, dn;
};
TripletGrad triplet_loss(const Eigen::VectorXd& a, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& n, double margin);

struct PairGrad {
  double loss;
  Eigen::VectorXd da, db;
};
PairGrad contrastive_loss(const Eigen::VectorXd& a, const Eigen::VectorXd& b, bool same,
                          double margin);

// ========================== batched encode/backward ==========================

// Encodes B sequences of one branch with equal frame counts and keeps every
// activation needed for the exact reverse pass. Forward never mutates params;
// normalisation statistics are only changed by the trainer between batches.
class SeqEncoder {
 public:
  SeqEncoder(Branch branch, const ModelParams& params);

  // seqs[b][t] is an n_pts x in_dim feature matrix; every sequence must have
  // the same number of frames and no empty frames
  Eigen::MatrixXd forward(const std::vector<std::vector<Eigen::MatrixXd>>& seqs);

  // dG: 64 x B gradient on the embeddings; accumulates into grads
  void backward(const Eigen::MatrixXd& dG, ModelParams& grads);

  // per-feature activation moments of the last forward, for stat updates
  struct StatAccum {
    std::vector<Eigen::VectorXd> sum, sumsq;
    std::vector<long> count;
  };
  void collect_stats(StatAccum& acc) const;

 private:
  Branch branch_;
  const ModelParams& p_;
  struct Impl;
  std::shared_ptr<Impl> im_;
};

// ================================ training ===================================

struct TrainRecord {
  int identity = 0;
  int walk = 0;
  std::vector<RadarFrame> radar;
  // gallery-side sequence; under the raw-mesh ablation these carry subsampled
  // mesh points instead of specular signature points
  std::vector<SignatureFrame> signature;
};

struct TrainConfig {
  double learning_rate = 2e-4;
  int batch_size = 32;
  int epochs = 2000;  // one sampled mini-batch per epoch
  double margin = 0.3;
  Ablation ablation = Ablation::Full;
  bool share_lstm = true;
  std::uint64_t seed = 1;
  int log_every = 100;  // 0 silences progress lines
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_trace;  // mean loss per epoch
};

// Adam (0.9, 0.999, 1e-8) on uniformly sampled triplets (or pairs under the
// contrastive ablation). Deterministic for fixed inputs and seed. Throws
// InsufficientIdentities (< 2 ids) and EmptySequence (a record with no
// non-empty frames on either side).
TrainResult train(const std::vector<TrainRecord>& dataset, const TrainConfig& cfg);

// =============================== checkpoints =================================

void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);  // ShapeMismatch on bad tensors

}  // namespace xreid
