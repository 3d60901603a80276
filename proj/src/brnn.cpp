#include "btpk/brnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <sstream>

#include "btpk/error.hpp"
#include "btpk/rng.hpp"
#include "kernels.hpp"

namespace btpk {

std::string_view to_string(MaskPropagation m) {
  return m == MaskPropagation::Propagate ? "propagate" : "output_only";
}

std::string_view to_string(Side s) {
  switch (s) {
    case Side::Both: return "both";
    case Side::Forward: return "forward";
    case Side::Backward: return "backward";
  }
  return "both";
}

MaskPropagation parse_mask_propagation(std::string_view s) {
  if (s == "propagate") return MaskPropagation::Propagate;
  if (s == "output_only") return MaskPropagation::OutputOnly;
  throw ContractError("mask_propagation must be 'propagate' or 'output_only', got '" +
                      std::string(s) + "'");
}

Side parse_side(std::string_view s) {
  if (s == "both") return Side::Both;
  if (s == "forward") return Side::Forward;
  if (s == "backward") return Side::Backward;
  throw ContractError("side must be 'both', 'forward' or 'backward', got '" + std::string(s) +
                      "'");
}

std::string_view to_string(ParamGroup g) {
  static constexpr std::array<std::string_view, kParamGroupCount> names{
      "embedding",     "forward_input",      "forward_recurrent",
      "forward_bias",  "backward_input",     "backward_recurrent",
      "backward_bias", "output_weight",      "output_bias"};
  return names[static_cast<std::size_t>(g)];
}

void ModelConfig::validate() const {
  if (embedding_dim == 0 || hidden_dim == 0) throw ContractError("dimensions must be positive");
  if (batch_size == 0) throw ContractError("batch_size must be positive");
  if (epochs == 0) throw ContractError("epochs must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ContractError("learning_rate must be a finite non-negative number");
}

// ---------------------------------------------------------------- Mask

Mask& Mask::add(std::size_t position, Side side) {
  if (side != Side::Backward) {
    if (fwd_.size() <= position) fwd_.resize(position + 1, 0);
    fwd_[position] = 1;
  }
  if (side != Side::Forward) {
    if (bwd_.size() <= position) bwd_.resize(position + 1, 0);
    bwd_[position] = 1;
  }
  return *this;
}

Mask& Mask::add_span(std::size_t first, std::size_t last, Side side) {
  for (std::size_t i = first; i <= last; ++i) add(i, side);
  return *this;
}

Mask Mask::all(std::size_t n, Side side) {
  Mask m;
  if (n > 0) m.add_span(0, n - 1, side);
  return m;
}

bool Mask::empty() const {
  return std::none_of(fwd_.begin(), fwd_.end(), [](char c) { return c; }) &&
         std::none_of(bwd_.begin(), bwd_.end(), [](char c) { return c; });
}

std::size_t Mask::extent() const {
  std::size_t e = 0;
  for (std::size_t i = 0; i < fwd_.size(); ++i)
    if (fwd_[i]) e = std::max(e, i + 1);
  for (std::size_t i = 0; i < bwd_.size(); ++i)
    if (bwd_[i]) e = std::max(e, i + 1);
  return e;
}

// ---------------------------------------------------------------- model

BrnnModel::BrnnModel(ModelConfig config, Vocab vocab, Tagset tagset)
    : config_(config), vocab_(std::move(vocab)), tagset_(std::move(tagset)) {
  config_.validate();
  if (vocab_.size() == 0) throw ContractError("empty vocabulary");
  if (tagset_.size() == 0) throw ContractError("empty tagset");
  const std::size_t e = config_.embedding_dim;
  const std::size_t h = config_.hidden_dim;
  const std::size_t k = tagset_.size();
  const std::array<std::size_t, kParamGroupCount> sizes{
      vocab_.size() * e, h * e, h * h, h, h * e, h * h, h, k * 2 * h, k};
  offsets_[0] = 0;
  for (std::size_t g = 0; g < kParamGroupCount; ++g) offsets_[g + 1] = offsets_[g] + sizes[g];
  params_.assign(offsets_.back(), 0.0);
}

std::size_t BrnnModel::group_size(ParamGroup g) const {
  const auto i = static_cast<std::size_t>(g);
  return offsets_[i + 1] - offsets_[i];
}

std::span<double> BrnnModel::group(ParamGroup g) {
  return std::span<double>(params_).subspan(group_offset(g), group_size(g));
}

std::span<const double> BrnnModel::group(ParamGroup g) const {
  return std::span<const double>(params_).subspan(group_offset(g), group_size(g));
}

std::uint64_t BrnnModel::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(params_.data());
  for (std::size_t i = 0; i < params_.size() * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

bool BrnnModel::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double x) { return std::isfinite(x); });
}

void BrnnModel::set_config(const ModelConfig& c) {
  if (c.embedding_dim != config_.embedding_dim || c.hidden_dim != config_.hidden_dim)
    throw ContractError("cannot change model dimensions after construction");
  c.validate();
  config_ = c;
}

BrnnModel init_model(const ModelConfig& config, const Vocab& vocab, const Tagset& tagset) {
  BrnnModel model(config, vocab, tagset);
  Rng rng(config.seed);
  for (double& p : model.params()) p = uniform(rng, -0.1, 0.1);
  return model;
}

// ---------------------------------------------------------------- forward

namespace {

/// Raw (pre-mask) tanh states plus logits for one sequence.
struct Pass {
  std::size_t n = 0;
  std::vector<double> fwd_raw;  // n x H
  std::vector<double> bwd_raw;  // n x H
  std::vector<double> logits;   // n x K
};

struct Dims {
  std::size_t e, h, k;
};

Dims dims_of(const BrnnModel& m) { return {m.embedding_dim(), m.hidden_dim(), m.num_tags()}; }

void check_ids(const BrnnModel& model, std::span<const std::size_t> ids, const Mask& mask) {
  if (ids.empty()) throw ContractError("token sequence is empty");
  for (std::size_t id : ids)
    if (id >= model.vocab_size())
      throw ContractError("token id " + std::to_string(id) + " outside vocabulary");
  if (mask.extent() > ids.size()) throw ContractError("mask position outside the sequence");
}

// Value consumed by the next recurrent step / by the readout.
inline bool rec_zero(bool masked, MaskPropagation mode) {
  return masked && mode == MaskPropagation::Propagate;
}

Pass run_pass(const BrnnModel& model, std::span<const std::size_t> ids, const Mask& mask) {
  const auto [e, h, k] = dims_of(model);
  const MaskPropagation mode = model.config().mask_propagation;
  const auto emb = model.group(ParamGroup::Embedding);
  Pass pass;
  pass.n = ids.size();
  const std::size_t n = pass.n;
  pass.fwd_raw.assign(n * h, 0.0);
  pass.bwd_raw.assign(n * h, 0.0);
  pass.logits.assign(n * k, 0.0);

  auto step = [&](ParamGroup in_w, ParamGroup rec_w, ParamGroup bias, std::size_t i,
                  const double* prev, double* out) {
    const auto b = model.group(bias);
    std::copy(b.begin(), b.end(), out);
    kernels::gemv_add(model.group(in_w), h, e, emb.data() + ids[i] * e, out);
    if (prev) kernels::gemv_add(model.group(rec_w), h, h, prev, out);
    for (std::size_t j = 0; j < h; ++j) out[j] = std::tanh(out[j]);
  };

  for (std::size_t i = 0; i < n; ++i) {
    const double* prev = nullptr;
    if (i > 0 && !rec_zero(mask.forward(i - 1), mode)) prev = pass.fwd_raw.data() + (i - 1) * h;
    step(ParamGroup::ForwardInput, ParamGroup::ForwardRecurrent, ParamGroup::ForwardBias, i, prev,
         pass.fwd_raw.data() + i * h);
  }
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = n - 1 - r;
    const double* prev = nullptr;
    if (i + 1 < n && !rec_zero(mask.backward(i + 1), mode))
      prev = pass.bwd_raw.data() + (i + 1) * h;
    step(ParamGroup::BackwardInput, ParamGroup::BackwardRecurrent, ParamGroup::BackwardBias, i,
         prev, pass.bwd_raw.data() + i * h);
  }

  const auto wo = model.group(ParamGroup::OutputWeight);
  const auto bo = model.group(ParamGroup::OutputBias);
  for (std::size_t i = 0; i < n; ++i) {
    double* out = pass.logits.data() + i * k;
    std::copy(bo.begin(), bo.end(), out);
    for (std::size_t t = 0; t < k; ++t) {
      const double* row = wo.data() + t * 2 * h;
      double acc = 0.0;
      if (!mask.forward(i)) {
        const double* hf = pass.fwd_raw.data() + i * h;
        for (std::size_t j = 0; j < h; ++j) acc += row[j] * hf[j];
      }
      if (!mask.backward(i)) {
        const double* hb = pass.bwd_raw.data() + i * h;
        for (std::size_t j = 0; j < h; ++j) acc += row[h + j] * hb[j];
      }
      out[t] += acc;
    }
  }
  return pass;
}

std::size_t argmax(std::span<const double> xs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] > xs[best]) best = i;
  return best;
}

}  // namespace

Trace forward(const BrnnModel& model, std::span<const std::size_t> token_ids, const Mask& mask) {
  check_ids(model, token_ids, mask);
  const auto [e, h, k] = dims_of(model);
  const Pass pass = run_pass(model, token_ids, mask);
  Trace trace;
  const std::size_t n = pass.n;
  trace.forward.resize(n);
  trace.backward.resize(n);
  trace.logits.resize(n);
  trace.predictions.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.forward(i)) trace.forward[i].assign(h, 0.0);
    else trace.forward[i].assign(pass.fwd_raw.begin() + i * h, pass.fwd_raw.begin() + (i + 1) * h);
    if (mask.backward(i)) trace.backward[i].assign(h, 0.0);
    else trace.backward[i].assign(pass.bwd_raw.begin() + i * h, pass.bwd_raw.begin() + (i + 1) * h);
    trace.logits[i].assign(pass.logits.begin() + i * k, pass.logits.begin() + (i + 1) * k);
    trace.predictions[i] = argmax(trace.logits[i]);
  }
  return trace;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& x : p) {
    x = std::exp(x - mx);
    z += x;
  }
  for (double& x : p) x /= z;
  return p;
}

namespace {

double log_softmax_at(std::span<const double> logits, std::size_t gold) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double x : logits) z += std::exp(x - mx);
  return logits[gold] - mx - std::log(z);
}

}  // namespace

double loss(const Trace& trace, std::span<const std::size_t> gold) {
  if (gold.size() != trace.size()) throw ContractError("gold length differs from trace length");
  if (gold.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= trace.logits[i].size()) throw ContractError("gold tag id out of range");
    total -= log_softmax_at(trace.logits[i], gold[i]);
  }
  return total / static_cast<double>(gold.size());
}

// ---------------------------------------------------------------- backward

double accumulate_gradient(const BrnnModel& model, std::span<const std::size_t> ids,
                           std::span<const std::size_t> gold, const Mask& mask,
                           std::span<double> grad) {
  check_ids(model, ids, mask);
  if (gold.size() != ids.size()) throw ContractError("gold length differs from sequence length");
  if (grad.size() != model.params().size()) throw ContractError("gradient buffer has wrong size");
  const auto [e, h, k] = dims_of(model);
  const MaskPropagation mode = model.config().mask_propagation;
  const Pass pass = run_pass(model, ids, mask);
  const std::size_t n = pass.n;
  const double inv_n = 1.0 / static_cast<double>(n);

  auto g = [&](ParamGroup group) { return grad.data() + model.group_offset(group); };
  const auto emb = model.group(ParamGroup::Embedding);
  const auto wo = model.group(ParamGroup::OutputWeight);

  // Readout: dlogits, output params, and d(loss)/d(state seen by readout).
  std::vector<double> dout_f(n * h, 0.0), dout_b(n * h, 0.0);
  std::vector<double> dlogits(k);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> li(pass.logits.data() + i * k, k);
    if (gold[i] >= k) throw ContractError("gold tag id out of range");
    total -= log_softmax_at(li, gold[i]);
    const auto p = softmax(li);
    for (std::size_t t = 0; t < k; ++t) dlogits[t] = (p[t] - (t == gold[i] ? 1.0 : 0.0)) * inv_n;
    double* gb = g(ParamGroup::OutputBias);
    for (std::size_t t = 0; t < k; ++t) gb[t] += dlogits[t];
    double* gw = g(ParamGroup::OutputWeight);
    if (!mask.forward(i)) {
      kernels::outer_add(gw, k, h, 2 * h, dlogits.data(), pass.fwd_raw.data() + i * h);
      for (std::size_t t = 0; t < k; ++t) {
        const double* row = wo.data() + t * 2 * h;
        double* d = dout_f.data() + i * h;
        for (std::size_t j = 0; j < h; ++j) d[j] += row[j] * dlogits[t];
      }
    }
    if (!mask.backward(i)) {
      kernels::outer_add(gw + h, k, h, 2 * h, dlogits.data(), pass.bwd_raw.data() + i * h);
      for (std::size_t t = 0; t < k; ++t) {
        const double* row = wo.data() + t * 2 * h + h;
        double* d = dout_b.data() + i * h;
        for (std::size_t j = 0; j < h; ++j) d[j] += row[j] * dlogits[t];
      }
    }
  }

  double* gemb = g(ParamGroup::Embedding);
  std::vector<double> dnext(h), dpre(h), dx(e);

  // One direction of BPTT. `order` lists positions in the order the
  // recurrence consumed them; `prev_of(idx)` is the predecessor position.
  auto bptt = [&](const std::vector<double>& raw, const std::vector<double>& dout,
                  bool backward_dir, ParamGroup in_w, ParamGroup rec_w, ParamGroup bias) {
    std::fill(dnext.begin(), dnext.end(), 0.0);
    const auto win = model.group(in_w);
    const auto wrec = model.group(rec_w);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t i = backward_dir ? r : n - 1 - r;
      const bool masked = backward_dir ? mask.backward(i) : mask.forward(i);
      const double* hi = raw.data() + i * h;
      for (std::size_t j = 0; j < h; ++j) {
        double d = 0.0;
        if (!masked) d += dout[i * h + j];
        if (!rec_zero(masked, mode)) d += dnext[j];
        dpre[j] = d * (1.0 - hi[j] * hi[j]);
      }
      double* gbias = g(bias);
      for (std::size_t j = 0; j < h; ++j) gbias[j] += dpre[j];
      kernels::outer_add(g(in_w), h, e, e, dpre.data(), emb.data() + ids[i] * e);
      std::fill(dx.begin(), dx.end(), 0.0);
      kernels::gemv_t_add(win, h, e, dpre.data(), dx.data());
      double* grow = gemb + ids[i] * e;
      for (std::size_t c = 0; c < e; ++c) grow[c] += dx[c];

      std::fill(dnext.begin(), dnext.end(), 0.0);
      const bool has_prev = backward_dir ? i + 1 < n : i > 0;
      if (!has_prev) continue;
      const std::size_t pi = backward_dir ? i + 1 : i - 1;
      const bool prev_masked = backward_dir ? mask.backward(pi) : mask.forward(pi);
      if (rec_zero(prev_masked, mode)) continue;
      kernels::outer_add(g(rec_w), h, h, h, dpre.data(), raw.data() + pi * h);
      kernels::gemv_t_add(wrec, h, h, dpre.data(), dnext.data());
    }
  };
  bptt(pass.fwd_raw, dout_f, false, ParamGroup::ForwardInput, ParamGroup::ForwardRecurrent,
       ParamGroup::ForwardBias);
  bptt(pass.bwd_raw, dout_b, true, ParamGroup::BackwardInput, ParamGroup::BackwardRecurrent,
       ParamGroup::BackwardBias);
  return total * inv_n;
}

Example encode(const BrnnModel& model, const TaggedSequence& seq) {
  if (seq.tokens.size() != seq.labels.size())
    throw ContractError("token/label length mismatch");
  Example ex;
  ex.ids = model.vocab().encode(seq.tokens);
  ex.gold.reserve(seq.labels.size());
  for (const auto& l : seq.labels) ex.gold.push_back(model.tagset().id(l));
  return ex;
}

namespace {

double reduce_slots(std::vector<std::vector<double>>& slots, const std::vector<double>& losses,
                    std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (std::size_t b = 0; b < slots.size(); ++b) {
    const auto& s = slots[b];
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += s[j];
    total += losses[b];
  }
  const double inv = 1.0 / static_cast<double>(slots.size());
  for (double& x : grad) x *= inv;
  return total * inv;
}

}  // namespace

double batch_gradient(const BrnnModel& model, std::span<const Example> batch,
                      std::span<double> grad) {
  if (batch.empty()) throw ContractError("empty batch");
  std::vector<std::vector<double>> slots(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  const auto count = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < count; ++b) {
    const auto u = static_cast<std::size_t>(b);
    slots[u].assign(grad.size(), 0.0);
    losses[u] = accumulate_gradient(model, batch[u].ids, batch[u].gold, Mask{}, slots[u]);
  }
  return reduce_slots(slots, losses, grad);
}

double batch_gradient_serial(const BrnnModel& model, std::span<const Example> batch,
                             std::span<double> grad) {
  if (batch.empty()) throw ContractError("empty batch");
  std::vector<std::vector<double>> slots(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    slots[b].assign(grad.size(), 0.0);
    losses[b] = accumulate_gradient(model, batch[b].ids, batch[b].gold, Mask{}, slots[b]);
  }
  return reduce_slots(slots, losses, grad);
}

// ---------------------------------------------------------------- training

namespace {

struct Adam {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m, v;
  std::uint64_t t = 0;

  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t j = 0; j < params.size(); ++j) {
      m[j] = beta1 * m[j] + (1.0 - beta1) * grad[j];
      v[j] = beta2 * v[j] + (1.0 - beta2) * grad[j] * grad[j];
      params[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
    }
  }
};

// Batches hold sequences of one exact length; order is seed-shuffled.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<Example>& data,
                                                   std::size_t batch_size, Rng& rng) {
  std::map<std::size_t, std::vector<std::size_t>> by_length;
  for (std::size_t i = 0; i < data.size(); ++i) by_length[data[i].ids.size()].push_back(i);
  std::vector<std::vector<std::size_t>> batches;
  for (auto& [len, idx] : by_length) {
    shuffle(std::span<std::size_t>(idx), rng);
    for (std::size_t s = 0; s < idx.size(); s += batch_size)
      batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(s),
                           idx.begin() + static_cast<std::ptrdiff_t>(std::min(s + batch_size, idx.size())));
  }
  shuffle(std::span<std::vector<std::size_t>>(batches), rng);
  return batches;
}

}  // namespace

std::vector<EpochRecord> train(BrnnModel& model, const std::vector<TaggedSequence>& train_data,
                               const std::vector<TaggedSequence>& dev_data) {
  if (train_data.empty()) throw ContractError("training data is empty");
  const ModelConfig& cfg = model.config();
  std::vector<Example> examples;
  examples.reserve(train_data.size());
  for (const auto& s : train_data) {
    if (s.tokens.empty()) throw ContractError("empty training sequence");
    examples.push_back(encode(model, s));
  }

  Adam adam(model.params().size());
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> grad(model.params().size());
  std::vector<Example> batch;
  std::vector<EpochRecord> history;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches = make_batches(examples, cfg.batch_size, rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      batch.clear();
      for (std::size_t i : batches[bi]) batch.push_back(examples[i]);
      const double l = batch_gradient(model, batch, grad);
      if (!std::isfinite(l)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch " << bi
            << " (batch size " << batch.size() << ", sequence length " << batch[0].ids.size()
            << ")";
        throw TrainingError(msg.str());
      }
      adam.step(model.params(), grad, cfg.learning_rate);
      if (!model.all_finite())
        throw TrainingError("non-finite parameter after update at epoch " +
                            std::to_string(epoch));
      loss_sum += l * static_cast<double>(batch.size());
      seen += batch.size();
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    if (!dev_data.empty()) rec.dev_accuracy = token_accuracy(model, dev_data);
    history.push_back(rec);
  }
  return history;
}

std::vector<std::size_t> predict(const BrnnModel& model, std::span<const std::size_t> token_ids) {
  return forward(model, token_ids).predictions;
}

std::vector<std::string> predict_tags(const BrnnModel& model,
                                      const std::vector<std::string>& tokens) {
  const auto ids = model.vocab().encode(tokens);
  std::vector<std::string> out;
  for (std::size_t p : predict(model, ids)) out.push_back(model.tagset().tag(p));
  return out;
}

double token_accuracy(const BrnnModel& model, const std::vector<TaggedSequence>& data) {
  std::size_t correct = 0, total = 0;
  for (const auto& s : data) {
    const Example ex = encode(model, s);
    const auto pred = predict(model, ex.ids);
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == ex.gold[i];
    total += pred.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

// ---------------------------------------------------------------- grad check

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const BrnnModel& model, const TaggedSequence& sample, double epsilon,
                           const Mask& mask, std::uint64_t seed, std::size_t per_group) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) throw ContractError("epsilon must lie in (0, 1e-2]");
  const Example ex = encode(model, sample);
  GradCheckReport report;
  report.analytic.assign(model.params().size(), 0.0);
  accumulate_gradient(model, ex.ids, ex.gold, mask, report.analytic);

  BrnnModel probe = model;
  auto objective = [&]() { return loss(forward(probe, ex.ids, mask), ex.gold); };
  Rng rng(seed);
  for (std::size_t gi = 0; gi < kParamGroupCount; ++gi) {
    const auto group = static_cast<ParamGroup>(gi);
    const std::size_t offset = model.group_offset(group);
    std::vector<std::size_t> coords(model.group_size(group));
    std::iota(coords.begin(), coords.end(), offset);
    if (coords.size() > per_group) {
      shuffle(std::span<std::size_t>(coords), rng);
      coords.resize(per_group);
    }
    double worst = 0.0;
    for (std::size_t c : coords) {
      const double saved = probe.params()[c];
      probe.params()[c] = saved + epsilon;
      const double up = objective();
      probe.params()[c] = saved - epsilon;
      const double down = objective();
      probe.params()[c] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      worst = std::max(worst, relative_error(report.analytic[c], numeric));
    }
    report.group_error[gi] = worst;
    report.max_relative_error = std::max(report.max_relative_error, worst);
    report.coordinates_checked += coords.size();
  }
  return report;
}

}  // namespace btpk
