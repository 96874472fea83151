#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpr/common.hpp"
#include "mpr/data_model.hpp"
#include "mpr/encoder.hpp"

namespace mpr {

enum class LossKind { nll, bce };

LossKind parse_loss_kind(std::string_view tag);
std::string_view to_string(LossKind loss);

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t max_positives = 3;
  LossKind loss = LossKind::bce;
  std::size_t epochs = 40;
  double lr = 1e-5;
  /// Defaults to 10% of the total number of optimizer steps.
  std::optional<std::size_t> warmup_steps;
  double dropout_rate = 0.1;
  std::uint64_t seed = 0;

  std::uint32_t vocab = 65536;
  std::uint32_t embed_dim = 128;
  std::uint32_t out_dim = 128;

  /// Throws ConfigError on B < 1, m_max < 1, lr <= 0, dropout outside
  /// [0, 1), or nll with max_positives != 1.
  void validate() const;
};

/// One in-batch training step's layout. Row i of the label mask covers the
/// whole pool and is true exactly at question i's own positives.
struct BatchPlan {
  std::vector<TrainingPair> questions;
  std::vector<Passage> pool;
  std::vector<std::size_t> owner;       // pool index -> question index
  std::vector<std::uint8_t> label_mask;  // questions.size() x pool.size()

  std::size_t batch_size() const { return questions.size(); }
  std::size_t pool_size() const { return pool.size(); }
  bool is_positive(std::size_t question, std::size_t passage) const {
    return label_mask[question * pool.size() + passage] != 0;
  }
  std::span<const std::uint8_t> mask_row(std::size_t question) const {
    return {label_mask.data() + question * pool.size(), pool.size()};
  }
  std::size_t positive_count(std::size_t question) const;
  std::size_t negative_count(std::size_t question) const;
};

/// Question-major similarity matrix, B x |pool|.
struct SimMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

/// Inner product. Throws std::invalid_argument on a length mismatch.
double sim(std::span<const double> q, std::span<const double> p);

/// Pool = each question's positives then its hard negative, in batch order.
/// Passages shared between questions are kept as separate pool entries and
/// the mask follows ownership. Throws std::invalid_argument when a pair has
/// no positive.
BatchPlan build_batch(std::span<const TrainingPair> pairs);

struct LossAndGrad {
  double loss = 0.0;
  Vector grad;  // d(loss)/d(sims), same length as the row
};

/// -log softmax(sims)[positive]; gradient softmax - onehot.
LossAndGrad nll_loss(std::span<const double> sims, std::size_t positive_index);

/// Binary cross-entropy over softmax-scaled similarities:
///   scores = softmax(sims)
///   loss   = -sum_pos log sigmoid(score) - sum_neg log(1 - sigmoid(score))
/// Log arguments are clamped at 1e-12.
LossAndGrad bce_loss(std::span<const double> sims, std::span<const std::uint8_t> mask);

struct BatchLoss {
  double loss = 0.0;
  EncoderParams grad;
  SimMatrix sims;
};

/// Mean per-question loss over the plan and its gradient with respect to
/// every parameter of both towers. Dropout is applied only when
/// config.dropout_rate > 0 and `dropout_rng` is given.
BatchLoss batch_loss(const BatchPlan& plan, const EncoderParams& params, const TrainConfig& config,
                     Rng* dropout_rng = nullptr);

/// Loss only, no dropout.
double batch_loss_value(const BatchPlan& plan, const EncoderParams& params,
                        const TrainConfig& config);

/// Max over all parameters of |a - n| / max(1e-8, |a| + |n|) where n is the
/// central difference with step `epsilon`. Dropout is ignored.
double grad_check(const BatchPlan& plan, const EncoderParams& params, const TrainConfig& config,
                  double epsilon = 1e-4);

/// Linear warmup to lr_max over warmup_steps, then linear decay to 0 at
/// total_steps.
double lr_schedule(std::size_t step, std::size_t total_steps, std::size_t warmup_steps,
                   double lr_max);

/// Adam with bias correction.
class Adam {
 public:
  explicit Adam(const EncoderParams& shape, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  void step(EncoderParams& params, const EncoderParams& grad, double lr);
  std::size_t steps_taken() const { return t_; }

 private:
  double beta1_;
  double beta2_;
  double eps_;
  std::size_t t_ = 0;
  EncoderParams m_;
  EncoderParams v_;
};

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double lr_last = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  EncoderParams params;
  std::vector<EpochLog> log;
};

/// Usable pairs of a dataset after discards, in dataset order.
std::vector<TrainingPair> usable_pairs(std::span<const QuestionRecord> records,
                                       std::size_t max_positives);

/// Trains both towers from init_params(config.seed, ...). Each epoch
/// shuffles the usable pairs with a seeded generator and drops the final
/// partial batch. Throws ConfigError with fewer than batch_size usable
/// pairs. Returned parameters are rounded to binary32.
TrainResult train(std::span<const QuestionRecord> records, const TrainConfig& config);

}  // namespace mpr
