#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gltt/matrix.hpp"

namespace gltt {

// ---------------------------------------------------------------------------
// Parameters

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix velocity;  // momentum buffer
};

/// Named learnable matrices with same-shape gradient accumulators.
/// Entries keep insertion order, which fixes checkpoint layout and
/// initialization order.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  /// Adds a zero-initialised entry. Throws ConfigError on duplicate names.
  Param& add(std::string name, std::size_t rows, std::size_t cols);
  /// Adds an entry initialised uniformly in [-sqrt(1/fan_in), sqrt(1/fan_in)].
  Param& add_uniform(std::string name, std::size_t rows, std::size_t cols,
                     std::size_t fan_in, std::mt19937_64& rng);

  bool contains(std::string_view name) const;
  /// Throws ConfigError when missing.
  Param& at(std::string_view name);
  const Param& at(std::string_view name) const;

  std::size_t entry_count() const noexcept { return params_.size(); }
  std::size_t parameter_count() const noexcept;
  std::uint64_t seed() const noexcept { return seed_; }

  Param& entry(std::size_t i) { return *params_[i]; }
  const Param& entry(std::size_t i) const { return *params_[i]; }

  void zero_grad();
  /// Bitwise equality of names, shapes and values.
  bool values_equal(const ParamStore& other) const;

 private:
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Param>> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct SgdOptions {
  double lr = 0.01;
  double momentum = 0.9;
  double grad_clip = 0.0;  // global L2 norm clip; 0 disables
};

/// v <- momentum * v + g; w <- w - lr * v. Throws NumericError naming the
/// first parameter whose gradient (or updated value) is non-finite.
void sgd_step(ParamStore& store, double lr, double momentum);
void sgd_step(ParamStore& store, const SgdOptions& options);

// ---------------------------------------------------------------------------
// Tape

class Tape;

/// Handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  bool valid() const noexcept { return tape != nullptr; }
  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Ordered record of primitive operations. Backward visits every node
/// recorded up to the loss exactly once, in reverse order, and then adds the
/// gradients of parameter leaves into their ParamStore entries.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf bound to a stored parameter; repeated calls for the same entry
  /// return the same node.
  Var parameter(ParamStore& store, std::string_view name);

  /// Records an op result. `parents` determine whether gradients are needed.
  Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward);
  Var record(Matrix value, std::span<const Var> parents, BackwardFn backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  /// Gradient buffer of node `id`, allocated on first use.
  Matrix& grad_buffer(std::size_t id);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Throws UsageError when the
  /// tape is empty, the loss is not 1x1, or backward already ran.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  /// Number of nodes whose backward closure ran in the last backward().
  std::size_t backward_visits() const noexcept { return visits_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    bool needs_grad = false;
    Param* param = nullptr;
  };
  std::vector<Node> nodes_;
  std::map<const Param*, std::size_t> param_nodes_;
  bool consumed_ = false;
  std::size_t visits_ = 0;
};

// ---------------------------------------------------------------------------
// Primitive ops. All record onto the tape of their first operand.

Var matmul(Var a, Var b);
/// x (B×n) + bias (1×n) broadcast over rows.
Var add_row(Var x, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var a);
Var sigmoid(Var a);
/// Cuts gradient flow; the value is copied.
Var detach(Var a);

/// Per-row normalisation to zero mean / unit variance, then per-channel
/// gamma (1×C) and beta (1×C).
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
/// Per-column normalisation using statistics over the rows (the batch).
Var batch_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

enum class Axis { rows, cols };
/// Numerically stable softmax. Axis::cols normalises each row across its
/// columns; Axis::rows normalises each column down its rows.
Var softmax(Var x, Axis axis);
/// Softmax down each column within consecutive blocks of `group` rows.
Var segment_softmax(Var x, std::size_t group);
/// Sums consecutive blocks of `group` rows: (G·group)×C → G×C.
Var segment_sum(Var x, std::size_t group);
/// Column-wise max within consecutive blocks of `group` rows. Gradient goes
/// to the first maximal row.
Var segment_max(Var x, std::size_t group);

Var gather_rows(Var x, std::span<const std::size_t> indices);
Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var slice_cols(Var x, std::size_t begin, std::size_t count);

/// Sum of all entries → 1×1.
Var sum(Var x);
Var mean(Var x);

/// Element-wise smooth-L1 with threshold `delta`.
Var smooth_l1(Var x, double delta = 1.0);
/// Element-wise wrap to (-pi, pi]; derivative 1 almost everywhere.
Var wrap_angles(Var x);
/// Element-wise binary cross entropy -[t ln p + (1-t) ln(1-p)] with p clamped
/// to [clamp, 1-clamp]; clamped entries receive zero gradient.
Var binary_cross_entropy(Var p, const Matrix& targets, double clamp = 1e-7);

// ---------------------------------------------------------------------------
// Layers

/// y = x·W + b with parameters `<prefix>.w` (in×out) and `<prefix>.b` (1×out).
Var linear(Var x, ParamStore& store, const std::string& prefix);
void init_linear(ParamStore& store, const std::string& prefix, std::size_t in,
                 std::size_t out, std::mt19937_64& rng);

enum class Activation { none, relu };
enum class NormKind { none, layer, batch };

const char* to_string(NormKind kind) noexcept;
NormKind parse_norm_kind(std::string_view text);

struct MlpLayer {
  std::size_t width = 0;
  NormKind norm = NormKind::none;
  Activation activation = Activation::none;
};

/// Sequential linear → (norm) → activation layers.
struct MlpSpec {
  std::size_t in = 0;
  std::vector<MlpLayer> layers;

  std::size_t out() const { return layers.empty() ? in : layers.back().width; }
  /// Throws ConfigError when empty or a width is zero.
  void validate() const;

  /// Linear → ReLU → Linear.
  static MlpSpec two_layer_relu(std::size_t in, std::size_t hidden, std::size_t out);
  /// Two hidden (linear → norm → ReLU) layers of the given widths, then a
  /// plain linear output layer.
  static MlpSpec three_layer(std::size_t in, std::size_t hidden1, std::size_t hidden2,
                             std::size_t out, NormKind norm);
};

void init_mlp(ParamStore& store, const std::string& prefix, const MlpSpec& spec,
              std::mt19937_64& rng);
Var mlp_forward(Var x, const MlpSpec& spec, ParamStore& store, const std::string& prefix);

}  // namespace gltt
