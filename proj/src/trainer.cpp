#include "mpr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mpr {

LossKind parse_loss_kind(std::string_view tag) {
  if (tag == "nll") return LossKind::nll;
  if (tag == "bce") return LossKind::bce;
  throw ConfigError("unknown loss \"" + std::string(tag) + "\" (expected nll or bce)");
}

std::string_view to_string(LossKind loss) { return loss == LossKind::nll ? "nll" : "bce"; }

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (max_positives < 1) throw ConfigError("max positives must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (loss == LossKind::nll && max_positives != 1) {
    throw ConfigError("nll loss requires exactly one positive per question (max positives = 1)");
  }
  if (vocab < 1 || embed_dim < 1 || out_dim < 1) throw ConfigError("encoder dimensions must be >= 1");
}

std::size_t BatchPlan::positive_count(std::size_t question) const {
  auto row = mask_row(question);
  return static_cast<std::size_t>(std::count(row.begin(), row.end(), std::uint8_t{1}));
}

std::size_t BatchPlan::negative_count(std::size_t question) const {
  return pool.size() - positive_count(question);
}

double sim(std::span<const double> q, std::span<const double> p) {
  if (q.size() != p.size()) throw std::invalid_argument("sim: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) acc += q[i] * p[i];
  return acc;
}

BatchPlan build_batch(std::span<const TrainingPair> pairs) {
  BatchPlan plan;
  plan.questions.assign(pairs.begin(), pairs.end());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].positives.empty()) throw std::invalid_argument("build_batch: pair without positives");
    for (const auto& p : pairs[i].positives) {
      plan.pool.push_back(p);
      plan.owner.push_back(i);
    }
    plan.pool.push_back(pairs[i].hard_negative);
    plan.owner.push_back(i);
  }
  const std::size_t cols = plan.pool.size();
  plan.label_mask.assign(pairs.size() * cols, 0);
  std::size_t j = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t k = 0; k < pairs[i].positives.size(); ++k) plan.label_mask[i * cols + j++] = 1;
    ++j;  // hard negative
  }
  return plan;
}

namespace {

Vector softmax(std::span<const double> x) {
  const double mx = *std::max_element(x.begin(), x.end());
  Vector s(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s[i] = std::exp(x[i] - mx);
    z += s[i];
  }
  for (auto& v : s) v /= z;
  return s;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr double kLogFloor = 1e-12;

}  // namespace

LossAndGrad nll_loss(std::span<const double> sims, std::size_t positive_index) {
  if (sims.empty() || positive_index >= sims.size()) {
    throw std::invalid_argument("nll_loss: positive index out of range");
  }
  const double mx = *std::max_element(sims.begin(), sims.end());
  double z = 0.0;
  for (double v : sims) z += std::exp(v - mx);
  LossAndGrad out;
  out.loss = std::log(z) - (sims[positive_index] - mx);
  out.grad.resize(sims.size());
  for (std::size_t i = 0; i < sims.size(); ++i) out.grad[i] = std::exp(sims[i] - mx) / z;
  out.grad[positive_index] -= 1.0;
  return out;
}

LossAndGrad bce_loss(std::span<const double> sims, std::span<const std::uint8_t> mask) {
  if (sims.size() != mask.size() || sims.empty()) {
    throw std::invalid_argument("bce_loss: row and mask lengths differ");
  }
  const Vector s = softmax(sims);
  // d(loss)/d(score)
  Vector g(s.size());
  LossAndGrad out;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (mask[j]) {
      const double p = sigmoid(s[j]);
      if (p > kLogFloor) {
        out.loss -= std::log(p);
        g[j] = -(1.0 - p);
      } else {
        out.loss -= std::log(kLogFloor);
        g[j] = 0.0;
      }
    } else {
      const double q = sigmoid(-s[j]);  // 1 - sigmoid(score)
      if (q > kLogFloor) {
        out.loss -= std::log(q);
        g[j] = 1.0 - q;
      } else {
        out.loss -= std::log(kLogFloor);
        g[j] = 0.0;
      }
    }
  }
  // Softmax Jacobian: d/dx_k = s_k (g_k - <g, s>).
  double gs = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) gs += g[j] * s[j];
  out.grad.resize(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) out.grad[k] = s[k] * (g[k] - gs);
  return out;
}

namespace {

struct EncodedBatch {
  std::vector<TokenIds> q_ids;
  std::vector<TokenIds> p_ids;
  std::vector<Vector> q_vecs;
  std::vector<Vector> p_vecs;
  std::vector<EncodeTrace> q_traces;
  std::vector<EncodeTrace> p_traces;
  SimMatrix sims;
};

EncodedBatch forward(const BatchPlan& plan, const EncoderParams& params, double dropout, Rng* rng) {
  EncodedBatch eb;
  const std::size_t b = plan.batch_size();
  const std::size_t n = plan.pool_size();
  eb.q_ids.resize(b);
  eb.q_vecs.resize(b);
  eb.q_traces.resize(b);
  eb.p_ids.resize(n);
  eb.p_vecs.resize(n);
  eb.p_traces.resize(n);
  for (std::size_t i = 0; i < b; ++i) {
    eb.q_ids[i] = tokenize(plan.questions[i].question, params.vocab);
    eb.q_vecs[i] = encode(params, Tower::question, eb.q_ids[i], dropout, rng, &eb.q_traces[i]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    eb.p_ids[j] = tokenize(passage_text(plan.pool[j]), params.vocab);
    eb.p_vecs[j] = encode(params, Tower::passage, eb.p_ids[j], dropout, rng, &eb.p_traces[j]);
  }
  eb.sims.rows = b;
  eb.sims.cols = n;
  eb.sims.values.resize(b * n);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < n; ++j) eb.sims.values[i * n + j] = sim(eb.q_vecs[i], eb.p_vecs[j]);
  }
  return eb;
}

LossAndGrad row_loss(const BatchPlan& plan, const SimMatrix& sims, std::size_t i, LossKind kind) {
  if (kind == LossKind::bce) return bce_loss(sims.row(i), plan.mask_row(i));
  const auto row = plan.mask_row(i);
  const auto pos = std::find(row.begin(), row.end(), std::uint8_t{1});
  if (plan.positive_count(i) != 1) {
    throw std::invalid_argument("nll loss needs exactly one positive per question");
  }
  return nll_loss(sims.row(i), static_cast<std::size_t>(pos - row.begin()));
}

}  // namespace

BatchLoss batch_loss(const BatchPlan& plan, const EncoderParams& params, const TrainConfig& config,
                     Rng* dropout_rng) {
  const bool use_dropout = config.dropout_rate > 0.0 && dropout_rng != nullptr;
  EncodedBatch eb = forward(plan, params, use_dropout ? config.dropout_rate : 0.0,
                            use_dropout ? dropout_rng : nullptr);
  const std::size_t b = plan.batch_size();
  const std::size_t n = plan.pool_size();
  const std::size_t d = params.out_dim;
  const double inv_b = 1.0 / static_cast<double>(b);

  BatchLoss out;
  out.grad = params.zeros_like();
  std::vector<Vector> dq(b, Vector(d, 0.0));
  std::vector<Vector> dp(n, Vector(d, 0.0));
  for (std::size_t i = 0; i < b; ++i) {
    const LossAndGrad lg = row_loss(plan, eb.sims, i, config.loss);
    out.loss += lg.loss * inv_b;
    for (std::size_t j = 0; j < n; ++j) {
      const double g = lg.grad[j] * inv_b;
      if (g == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) {
        dq[i][k] += g * eb.p_vecs[j][k];
        dp[j][k] += g * eb.q_vecs[i][k];
      }
    }
  }
  for (std::size_t i = 0; i < b; ++i) {
    backprop_encode(params, Tower::question, eb.q_ids[i], eb.q_traces[i], dq[i], out.grad);
  }
  for (std::size_t j = 0; j < n; ++j) {
    backprop_encode(params, Tower::passage, eb.p_ids[j], eb.p_traces[j], dp[j], out.grad);
  }
  out.sims = std::move(eb.sims);
  return out;
}

double batch_loss_value(const BatchPlan& plan, const EncoderParams& params,
                        const TrainConfig& config) {
  const EncodedBatch eb = forward(plan, params, 0.0, nullptr);
  double loss = 0.0;
  for (std::size_t i = 0; i < plan.batch_size(); ++i) {
    loss += row_loss(plan, eb.sims, i, config.loss).loss;
  }
  return loss / static_cast<double>(plan.batch_size());
}

namespace {

// Extended-precision forward pass used as the finite-difference reference.
// A double forward pass leaves about one ulp of the loss (~1e-16) as noise
// in each difference, i.e. ~1e-12 in the estimate after dividing by 2e-4,
// which swamps gradients near 1e-8.
using Wide = long double;

std::vector<Wide> wide_encode(const EncoderParams& params, Tower tower,
                              std::span<const std::uint32_t> ids) {
  const auto& tw = params.tower(tower);
  const std::size_t de = params.embed_dim;
  const std::size_t d = params.out_dim;
  std::vector<Wide> pooled(de, 0.0L);
  for (std::uint32_t id : ids) {
    for (std::size_t e = 0; e < de; ++e) pooled[e] += tw.embedding[id * de + e];
  }
  if (!ids.empty()) {
    for (auto& v : pooled) v /= static_cast<Wide>(ids.size());
  }
  std::vector<Wide> out(d);
  for (std::size_t k = 0; k < d; ++k) {
    Wide acc = tw.bias[k];
    for (std::size_t e = 0; e < de; ++e) acc += pooled[e] * tw.projection[e * d + k];
    out[k] = acc;
  }
  return out;
}

Wide wide_loss(const BatchPlan& plan, const EncoderParams& params, LossKind kind) {
  std::vector<std::vector<Wide>> p_vecs;
  for (const auto& p : plan.pool) {
    p_vecs.push_back(wide_encode(params, Tower::passage, tokenize(passage_text(p), params.vocab)));
  }
  Wide total = 0.0L;
  for (std::size_t i = 0; i < plan.batch_size(); ++i) {
    const auto q = wide_encode(params, Tower::question, tokenize(plan.questions[i].question, params.vocab));
    std::vector<Wide> row(plan.pool_size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      Wide acc = 0.0L;
      for (std::size_t k = 0; k < q.size(); ++k) acc += q[k] * p_vecs[j][k];
      row[j] = acc;
    }
    const Wide mx = *std::max_element(row.begin(), row.end());
    Wide z = 0.0L;
    for (Wide v : row) z += std::exp(v - mx);
    if (kind == LossKind::nll) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (plan.is_positive(i, j)) total += std::log(z) - (row[j] - mx);
      }
      continue;
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      const Wide s = std::exp(row[j] - mx) / z;
      const Wide arg = plan.is_positive(i, j) ? 1.0L / (1.0L + std::exp(-s)) : 1.0L / (1.0L + std::exp(s));
      total -= std::log(std::max(arg, static_cast<Wide>(kLogFloor)));
    }
  }
  return total / static_cast<Wide>(plan.batch_size());
}

}  // namespace

double grad_check(const BatchPlan& plan, const EncoderParams& params, const TrainConfig& config,
                  double epsilon) {
  const BatchLoss analytic = batch_loss(plan, params, config, nullptr);
  EncoderParams probe = params;
  const auto grads = analytic.grad.buffers();
  auto bufs = probe.buffers();
  double worst = 0.0;
  for (std::size_t b = 0; b < bufs.size(); ++b) {
    auto& buf = *bufs[b];
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const double orig = buf[i];
      const double hi = orig + epsilon;
      const double lo = orig - epsilon;
      buf[i] = hi;
      const Wide up = wide_loss(plan, probe, config.loss);
      buf[i] = lo;
      const Wide down = wide_loss(plan, probe, config.loss);
      buf[i] = orig;
      const double numeric = static_cast<double>((up - down) / (static_cast<Wide>(hi) - lo));
      const double a = (*grads[b])[i];
      const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

double lr_schedule(std::size_t step, std::size_t total_steps, std::size_t warmup_steps,
                   double lr_max) {
  if (warmup_steps > 0 && step <= warmup_steps) {
    return lr_max * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  if (step >= total_steps) return 0.0;
  return lr_max * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warmup_steps);
}

Adam::Adam(const EncoderParams& shape, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(shape.zeros_like()), v_(shape.zeros_like()) {}

void Adam::step(EncoderParams& params, const EncoderParams& grad, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto p = params.buffers();
  auto g = grad.buffers();
  auto m = m_.buffers();
  auto v = v_.buffers();
  for (std::size_t b = 0; b < p.size(); ++b) {
    auto& pb = *p[b];
    const auto& gb = *g[b];
    auto& mb = *m[b];
    auto& vb = *v[b];
    for (std::size_t i = 0; i < pb.size(); ++i) {
      mb[i] = beta1_ * mb[i] + (1.0 - beta1_) * gb[i];
      vb[i] = beta2_ * vb[i] + (1.0 - beta2_) * gb[i] * gb[i];
      const double mhat = mb[i] / bc1;
      const double vhat = vb[i] / bc2;
      pb[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

std::vector<TrainingPair> usable_pairs(std::span<const QuestionRecord> records,
                                       std::size_t max_positives) {
  std::vector<TrainingPair> pairs;
  for (const auto& r : records) {
    if (auto p = select_training_pairs(r, max_positives)) pairs.push_back(std::move(*p));
  }
  return pairs;
}

TrainResult train(std::span<const QuestionRecord> records, const TrainConfig& config) {
  config.validate();
  const std::vector<TrainingPair> pairs = usable_pairs(records, config.max_positives);
  if (pairs.size() < config.batch_size) {
    throw InsufficientDataError("only " + std::to_string(pairs.size()) + " usable training pairs, batch size is " +
                      std::to_string(config.batch_size));
  }

  TrainResult result;
  result.params = init_params(config.seed, config.vocab, config.embed_dim, config.out_dim);
  const std::size_t steps_per_epoch = pairs.size() / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.epochs;
  const std::size_t warmup = std::min(total_steps, config.warmup_steps.value_or(total_steps / 10));

  Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  Rng dropout_rng(config.seed ^ 0xd1b54a32d192ed03ULL);
  Adam adam(result.params);
  std::vector<std::size_t> order(pairs.size());
  std::vector<TrainingPair> batch(config.batch_size);
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      for (std::size_t i = 0; i < config.batch_size; ++i) {
        batch[i] = pairs[order[s * config.batch_size + i]];
      }
      const BatchPlan plan = build_batch(batch);
      const BatchLoss bl = batch_loss(plan, result.params, config, &dropout_rng);
      lr = lr_schedule(step, total_steps, warmup, config.lr);
      adam.step(result.params, bl.grad, lr);
      loss_sum += bl.loss;
      ++step;
    }
    const auto t1 = std::chrono::steady_clock::now();
    result.log.push_back({epoch + 1, loss_sum / static_cast<double>(steps_per_epoch), lr,
                          std::chrono::duration<double, std::milli>(t1 - t0).count()});
  }

  for (auto* buf : result.params.buffers()) {
    for (auto& v : *buf) v = round_to_float(v);
  }
  return result;
}

}  // namespace mpr
