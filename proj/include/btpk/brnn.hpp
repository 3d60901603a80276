#pragma once

// Bidirectional Elman (tanh) tagger with hand-written backprop-through-time.
//
//   h^f_i = tanh(W_f x_i + U_f h^f_{i-1} + b_f)      left to right
//   h^b_i = tanh(W_b x_i + U_b h^b_{i+1} + b_b)      right to left
//   logits_i = W_o [h^f_i ; h^b_i] + b_o
//
// A Mask zeroes chosen hidden states. Under MaskPropagation::Propagate the
// zero is also what the next recurrent step consumes; under OutputOnly only
// the readout sees it.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "btpk/corpus.hpp"

namespace btpk {

enum class MaskPropagation { Propagate, OutputOnly };
enum class Side { Both, Forward, Backward };

std::string_view to_string(MaskPropagation m);
std::string_view to_string(Side s);
MaskPropagation parse_mask_propagation(std::string_view s);  // throws ContractError
Side parse_side(std::string_view s);                           // throws ContractError

struct ModelConfig {
  std::size_t embedding_dim = 128;
  std::size_t hidden_dim = 128;
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  std::uint64_t seed = 42;
  MaskPropagation mask_propagation = MaskPropagation::Propagate;

  void validate() const;  // throws ContractError
  bool operator==(const ModelConfig&) const = default;
};

/// Set of zeroed (position, direction) hidden states. Adding a pair twice is
/// the same as adding it once.
class Mask {
 public:
  Mask() = default;
  Mask& add(std::size_t position, Side side);
  /// Masks every position in [first, last] on `side`.
  Mask& add_span(std::size_t first, std::size_t last, Side side);
  static Mask all(std::size_t n, Side side);

  bool forward(std::size_t i) const { return i < fwd_.size() && fwd_[i]; }
  bool backward(std::size_t i) const { return i < bwd_.size() && bwd_[i]; }
  bool empty() const;
  /// One past the largest masked position (0 when empty).
  std::size_t extent() const;

 private:
  std::vector<char> fwd_;
  std::vector<char> bwd_;
};

enum class ParamGroup : std::size_t {
  Embedding,
  ForwardInput,
  ForwardRecurrent,
  ForwardBias,
  BackwardInput,
  BackwardRecurrent,
  BackwardBias,
  OutputWeight,
  OutputBias,
};
inline constexpr std::size_t kParamGroupCount = 9;
std::string_view to_string(ParamGroup g);

/// All parameters live in one flat buffer; groups are views into it.
class BrnnModel {
 public:
  /// Zero-initialized parameters; see init_model for the seeded draw.
  BrnnModel(ModelConfig config, Vocab vocab, Tagset tagset);

  const ModelConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  const Tagset& tagset() const { return tagset_; }
  std::size_t embedding_dim() const { return config_.embedding_dim; }
  std::size_t hidden_dim() const { return config_.hidden_dim; }
  std::size_t num_tags() const { return tagset_.size(); }
  std::size_t vocab_size() const { return vocab_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<double> group(ParamGroup g);
  std::span<const double> group(ParamGroup g) const;
  std::size_t group_offset(ParamGroup g) const { return offsets_[static_cast<std::size_t>(g)]; }
  std::size_t group_size(ParamGroup g) const;

  /// FNV-1a over the raw parameter bytes.
  std::uint64_t checksum() const;
  bool all_finite() const;

  /// Allows retraining with a modified config (e.g. a different seed).
  void set_config(const ModelConfig& c);

 private:
  ModelConfig config_;
  Vocab vocab_;
  Tagset tagset_;
  std::array<std::size_t, kParamGroupCount + 1> offsets_{};
  std::vector<double> params_;
};

/// Draws every parameter uniformly from [-0.1, 0.1) with config.seed.
BrnnModel init_model(const ModelConfig& config, const Vocab& vocab, const Tagset& tagset);

/// Per-position outputs. `forward`/`backward` are the states the readout saw
/// (zero where masked).
struct Trace {
  std::vector<std::vector<double>> forward;
  std::vector<std::vector<double>> backward;
  std::vector<std::vector<double>> logits;
  std::vector<std::size_t> predictions;

  std::size_t size() const { return predictions.size(); }
};

Trace forward(const BrnnModel& model, std::span<const std::size_t> token_ids,
              const Mask& mask = {});

/// Numerically stable softmax (max subtraction).
std::vector<double> softmax(std::span<const double> logits);

/// Mean negative log-likelihood of the gold tags.
double loss(const Trace& trace, std::span<const std::size_t> gold);

/// Adds d loss / d params for one sequence into `grad` (same layout as
/// model.params()) and returns the loss.
double accumulate_gradient(const BrnnModel& model, std::span<const std::size_t> token_ids,
                           std::span<const std::size_t> gold, const Mask& mask,
                           std::span<double> grad);

struct Example {
  std::vector<std::size_t> ids;
  std::vector<std::size_t> gold;
};

Example encode(const BrnnModel& model, const TaggedSequence& seq);  // throws on unknown tag

/// Mean gradient over a mini-batch, written into `grad`; returns mean loss.
/// Sequences are processed concurrently with OpenMP and reduced in batch
/// order, so the result is bit-identical to batch_gradient_serial.
double batch_gradient(const BrnnModel& model, std::span<const Example> batch,
                      std::span<double> grad);
double batch_gradient_serial(const BrnnModel& model, std::span<const Example> batch,
                             std::span<double> grad);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_accuracy;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adam over length-bucketed, seed-shuffled mini-batches. Uses the model's
/// own config for hyperparameters.
std::vector<EpochRecord> train(BrnnModel& model, const std::vector<TaggedSequence>& train_data,
                               const std::vector<TaggedSequence>& dev_data);

std::vector<std::size_t> predict(const BrnnModel& model, std::span<const std::size_t> token_ids);
std::vector<std::string> predict_tags(const BrnnModel& model,
                                      const std::vector<std::string>& tokens);
double token_accuracy(const BrnnModel& model, const std::vector<TaggedSequence>& data);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::array<double, kParamGroupCount> group_error{};
  std::size_t coordinates_checked = 0;
  /// Analytic gradient over all parameters, for inspection by tests.
  std::vector<double> analytic;
};

/// Central finite differences on up to `per_group` random coordinates of
/// every parameter group (all coordinates when the group is smaller).
GradCheckReport grad_check(const BrnnModel& model, const TaggedSequence& sample, double epsilon,
                           const Mask& mask = {}, std::uint64_t seed = 0,
                           std::size_t per_group = 20);

/// |a - n| / max(|a|, |n|, 1e-6)
double relative_error(double analytic, double numeric);

}  // namespace btpk
