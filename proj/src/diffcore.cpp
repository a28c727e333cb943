#include "gltt/diffcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gltt/error.hpp"
#include "gltt/geometry.hpp"

namespace gltt {

// ---------------------------------------------------------------------------
// ParamStore

ParamStore::ParamStore(const ParamStore& other) : seed_(other.seed_), index_(other.index_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Param>(*p));
}

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this != &other) {
    ParamStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Param& ParamStore::add(std::string name, std::size_t rows, std::size_t cols) {
  if (index_.count(name)) throw ConfigError("ParamStore: duplicate parameter '" + name + "'");
  if (rows == 0 || cols == 0)
    throw ConfigError("ParamStore: parameter '" + name + "' has an empty shape");
  index_.emplace(name, params_.size());
  params_.push_back(std::make_unique<Param>(
      Param{std::move(name), Matrix(rows, cols), Matrix(rows, cols), Matrix(rows, cols)}));
  return *params_.back();
}

Param& ParamStore::add_uniform(std::string name, std::size_t rows, std::size_t cols,
                               std::size_t fan_in, std::mt19937_64& rng) {
  Param& p = add(std::move(name), rows, cols);
  const double bound = std::sqrt(1.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : p.value.values()) v = dist(rng);
  return p;
}

bool ParamStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

Param& ParamStore::at(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end())
    throw ConfigError("ParamStore: missing parameter '" + std::string(name) + "'");
  return *params_[it->second];
}

const Param& ParamStore::at(std::string_view name) const {
  return const_cast<ParamStore*>(this)->at(name);
}

std::size_t ParamStore::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

bool ParamStore::values_equal(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i]->name != other.params_[i]->name) return false;
    if (!(params_[i]->value == other.params_[i]->value)) return false;
  }
  return true;
}

void sgd_step(ParamStore& store, double lr, double momentum) {
  sgd_step(store, SgdOptions{lr, momentum, 0.0});
}

void sgd_step(ParamStore& store, const SgdOptions& options) {
  double norm2 = 0.0;
  for (std::size_t i = 0; i < store.entry_count(); ++i) {
    const Param& p = store.entry(i);
    if (!p.grad.all_finite())
      throw NumericError("sgd_step: non-finite gradient in parameter '" + p.name + "'");
    for (double g : p.grad.values()) norm2 += g * g;
  }
  double factor = 1.0;
  if (options.grad_clip > 0.0) {
    const double norm = std::sqrt(norm2);
    if (norm > options.grad_clip) factor = options.grad_clip / norm;
  }
  for (std::size_t i = 0; i < store.entry_count(); ++i) {
    Param& p = store.entry(i);
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      p.velocity[k] = options.momentum * p.velocity[k] + factor * p.grad[k];
      p.value[k] -= options.lr * p.velocity[k];
    }
    if (!p.value.all_finite())
      throw NumericError("sgd_step: parameter '" + p.name + "' became non-finite");
  }
}

// ---------------------------------------------------------------------------
// Tape

const Matrix& Var::value() const {
  if (!tape) throw UsageError("Var: not bound to a tape");
  return tape->value(id);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(ParamStore& store, std::string_view name) {
  Param* p = &store.at(name);
  if (auto it = param_nodes_.find(p); it != param_nodes_.end()) return Var{this, it->second};
  nodes_.push_back(Node{p->value, {}, {}, true, p});
  param_nodes_.emplace(p, nodes_.size() - 1);
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape != this) throw UsageError("Tape: operand recorded on a different tape");
    needs = needs || nodes_[p.id].needs_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : BackwardFn{},
                        needs, nullptr});
  return Var{this, nodes_.size() - 1};
}

Matrix& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw UsageError("backward: nothing was recorded");
  if (loss.tape != this) throw UsageError("backward: loss belongs to another tape");
  if (consumed_) throw UsageError("backward: already ran on this tape");
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1)
    throw UsageError("backward: loss must be 1x1, got " + lv.shape_string());
  consumed_ = true;
  visits_ = 0;
  grad_buffer(loss.id)(0, 0) = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, id);
    ++visits_;
  }
  for (std::size_t id = 0; id <= loss.id; ++id) {
    Node& n = nodes_[id];
    if (!n.param || n.grad.empty()) continue;
    for (std::size_t k = 0; k < n.grad.size(); ++k) n.param->grad[k] += n.grad[k];
  }
}

// ---------------------------------------------------------------------------
// Ops

namespace {

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string());
}

void require_group(const char* op, const Matrix& x, std::size_t group) {
  if (group == 0 || x.rows() % group != 0)
    throw ShapeError(std::string(op) + ": " + std::to_string(x.rows()) +
                     " rows not divisible by group " + std::to_string(group));
}

// Adds `delta` into the gradient of `id` when that node needs one.
template <typename F>
void accumulate(Tape& t, std::size_t id, F&& body) {
  if (!t.needs_grad(id)) return;
  body(t.grad_buffer(id));
}

}  // namespace

Var matmul(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.cols() != B.rows())
    throw ShapeError("matmul: " + A.shape_string() + " · " + B.shape_string());
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  Matrix C(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = &C(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A(i, p);
      if (av == 0.0) continue;
      const double* brow = &B(p, 0);
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(C), {a, b}, [ia, ib, n, k, m](Tape& t, std::size_t self) {
    const Matrix& G = t.grad(self);
    accumulate(t, ia, [&](Matrix& dA) {
      const Matrix& B = t.value(ib);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += G(i, j) * B(p, j);
          dA(i, p) += s;
        }
    });
    accumulate(t, ib, [&](Matrix& dB) {
      const Matrix& A = t.value(ia);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A(i, p);
          if (av == 0.0) continue;
          for (std::size_t j = 0; j < m; ++j) dB(p, j) += av * G(i, j);
        }
    });
  });
}

Var add_row(Var x, Var bias) {
  const Matrix& X = x.value();
  const Matrix& b = bias.value();
  if (b.rows() != 1 || b.cols() != X.cols())
    throw ShapeError("add_row: " + X.shape_string() + " + " + b.shape_string());
  Matrix Y = X;
  for (std::size_t i = 0; i < Y.rows(); ++i)
    for (std::size_t j = 0; j < Y.cols(); ++j) Y(i, j) += b(0, j);
  const std::size_t ix = x.id, ib = bias.id;
  return x.tape->record(std::move(Y), {x, bias}, [ix, ib](Tape& t, std::size_t self) {
    const Matrix& G = t.grad(self);
    accumulate(t, ix, [&](Matrix& d) {
      for (std::size_t k = 0; k < G.size(); ++k) d[k] += G[k];
    });
    accumulate(t, ib, [&](Matrix& d) {
      for (std::size_t i = 0; i < G.rows(); ++i)
        for (std::size_t j = 0; j < G.cols(); ++j) d(0, j) += G(i, j);
    });
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  Matrix Y = a.value();
  const Matrix& B = b.value();
  for (std::size_t k = 0; k < Y.size(); ++k) Y[k] += B[k];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(Y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& G = t.grad(self);
    for (std::size_t id : {ia, ib})
      accumulate(t, id, [&](Matrix& d) {
        for (std::size_t k = 0; k < G.size(); ++k) d[k] += G[k];
      });
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a.value(), b.value());
  Matrix Y = a.value();
  const Matrix& B = b.value();
  for (std::size_t k = 0; k < Y.size(); ++k) Y[k] -= B[k];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(Y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& G = t.grad(self);
    accumulate(t, ia, [&](Matrix& d) {
      for (std::size_t k = 0; k < G.size(); ++k) d[k] += G[k];
    });
    accumulate(t, ib, [&](Matrix& d) {
      for (std::size_t k = 0; k < G.size(); ++k) d[k] -= G[k];
    });
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a.value(), b.value());
  Matrix Y = a.value();
  const Matrix& B = b.value();
  for (std::size_t k = 0; k < Y.size(); ++k) Y[k] *= B[k];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(Y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& G = t.grad(self);
    accumulate(t, ia, [&](Matrix& d) {
      const Matrix& B = t.value(ib);
      for (std::size_t k = 0; k < G.size(); ++k) d[k] += G[k] * B[k];
    });
    accumulate(t, ib, [&](Matrix& d) {
      const Matrix& A = t.value(ia);
      for (std::size_t k = 0; k < G.size(); ++k) d[k] += G[k] * A[k];
    });
  });
}

Var scale(Var a, double s) {
  Matrix Y = a.value();
  for (double& v : Y.values()) v *= s;
  const std::size_t ia = a.id;
  return a.tape->record(std::move(Y), {a}, [ia, s](Tape& t, std::size_t self) {
    const Matrix& G = t.grad(self);
    accumulate(t, ia, [&](Matrix& d) {
      for (std::size_t k = 0; k < G.size(); ++k) d[k] += s * G[k];
    });
  });
}

Var relu(Var a) {
  Matrix Y = a.value();
  for (double& v : Y.values()) v = v > 0.0 ? v : 0.0;
  const std::size_t ia = a.id;
  return a.tape->record(std::move(Y), {a}, [ia](Tape& t, std::size_t self) {
    const Matrix& G = t.grad(self);
    accumulate(t, ia, [&](Matrix& d) {
      const Matrix& X = t.value(ia);
      for (std::size_t k = 0; k < G.size(); ++k)
        if (X[k] > 0.0) d[k] += G[k];
    });
  });
}

Var sigmoid(Var a) {
  Matrix Y = a.value();
  for (double& v : Y.values())
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  const std::size_t ia = a.id;
  return a.tape->record(std::move(Y), {a}, [ia](Tape& t, std::size_t self) {
    const Matrix& G = t.grad(self);
    const Matrix& Y = t.value(self);
    accumulate(t, ia, [&](Matrix& d) {
      for (std::size_t k = 0; k < G.size(); ++k) d[k] += G[k] * Y[k] * (1.0 - Y[k]);
    });
  });
}

Var detach(Var a) { return a.tape->constant(a.value()); }

namespace {

// Shared by layer and batch normalisation. `per_row` selects per-row
// statistics (layer norm) versus per-column statistics (batch norm).
Var normalize(const char* op, Var x, Var gamma, Var beta, double eps, bool per_row) {
  const Matrix& X = x.value();
  const std::size_t R = X.rows(), C = X.cols();
  if (gamma.value().rows() != 1 || gamma.value().cols() != C || !gamma.value().same_shape(beta.value()))
    throw ShapeError(std::string(op) + ": affine shape mismatch for " + X.shape_string());
  const std::size_t groups = per_row ? R : C;
  const std::size_t len = per_row ? C : R;
  if (len < 2) throw ShapeError(std::string(op) + ": needs at least 2 entries per group");
  auto at = [per_row](const Matrix& M, std::size_t g, std::size_t e) {
    return per_row ? M(g, e) : M(e, g);
  };
  auto ref = [per_row](Matrix& M, std::size_t g, std::size_t e) -> double& {
    return per_row ? M(g, e) : M(e, g);
  };

  Matrix xhat(R, C);
  std::vector<double> inv_std(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    double mu = 0.0;
    for (std::size_t e = 0; e < len; ++e) mu += at(X, g, e);
    mu /= static_cast<double>(len);
    double var = 0.0;
    for (std::size_t e = 0; e < len; ++e) {
      const double c = at(X, g, e) - mu;
      var += c * c;
    }
    var /= static_cast<double>(len);
    inv_std[g] = 1.0 / std::sqrt(var + eps);
    for (std::size_t e = 0; e < len; ++e)
      ref(xhat, g, e) = (at(X, g, e) - mu) * inv_std[g];
  }
  const Matrix& gm = gamma.value();
  const Matrix& bt = beta.value();
  Matrix Y(R, C);
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < C; ++j) Y(i, j) = xhat(i, j) * gm(0, j) + bt(0, j);

  const std::size_t ix = x.id, ig = gamma.id, ib = beta.id;
  return x.tape->record(
      std::move(Y), {x, gamma, beta},
      [ix, ig, ib, R, C, groups, len, per_row, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
        const Matrix& G = t.grad(self);
        const Matrix& gm = t.value(ig);
        accumulate(t, ig, [&](Matrix& d) {
          for (std::size_t i = 0; i < R; ++i)
            for (std::size_t j = 0; j < C; ++j) d(0, j) += G(i, j) * xhat(i, j);
        });
        accumulate(t, ib, [&](Matrix& d) {
          for (std::size_t i = 0; i < R; ++i)
            for (std::size_t j = 0; j < C; ++j) d(0, j) += G(i, j);
        });
        accumulate(t, ix, [&](Matrix& d) {
          auto idx = [per_row](std::size_t g, std::size_t e) {
            return per_row ? std::pair{g, e} : std::pair{e, g};
          };
          for (std::size_t g = 0; g < groups; ++g) {
            double mean_dh = 0.0, mean_dh_xh = 0.0;
            for (std::size_t e = 0; e < len; ++e) {
              auto [i, j] = idx(g, e);
              const double dh = G(i, j) * gm(0, j);
              mean_dh += dh;
              mean_dh_xh += dh * xhat(i, j);
            }
            mean_dh /= static_cast<double>(len);
            mean_dh_xh /= static_cast<double>(len);
            for (std::size_t e = 0; e < len; ++e) {
              auto [i, j] = idx(g, e);
              const double dh = G(i, j) * gm(0, j);
              d(i, j) += inv_std[g] * (dh - mean_dh - xhat(i, j) * mean_dh_xh);
            }
          }
        });
      });
}

}  // namespace

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  return normalize("layer_norm", x, gamma, beta, eps, true);
}

Var batch_norm(Var x, Var gamma, Var beta, double eps) {
  return normalize("batch_norm", x, gamma, beta, eps, false);
}

Var segment_softmax(Var x, std::size_t group) {
  const Matrix& X = x.value();
  require_group("segment_softmax", X, group);
  const std::size_t C = X.cols(), G = X.rows() / group;
  Matrix Y(X.rows(), C);
  for (std::size_t g = 0; g < G; ++g) {
    const std::size_t r0 = g * group;
    for (std::size_t c = 0; c < C; ++c) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < group; ++r) mx = std::max(mx, X(r0 + r, c));
      double z = 0.0;
      for (std::size_t r = 0; r < group; ++r) {
        Y(r0 + r, c) = std::exp(X(r0 + r, c) - mx);
        z += Y(r0 + r, c);
      }
      for (std::size_t r = 0; r < group; ++r) Y(r0 + r, c) /= z;
    }
  }
  const std::size_t ix = x.id;
  return x.tape->record(std::move(Y), {x}, [ix, group, G, C](Tape& t, std::size_t self) {
    const Matrix& D = t.grad(self);
    const Matrix& Y = t.value(self);
    accumulate(t, ix, [&](Matrix& d) {
      for (std::size_t g = 0; g < G; ++g) {
        const std::size_t r0 = g * group;
        for (std::size_t c = 0; c < C; ++c) {
          double dot = 0.0;
          for (std::size_t r = 0; r < group; ++r) dot += Y(r0 + r, c) * D(r0 + r, c);
          for (std::size_t r = 0; r < group; ++r)
            d(r0 + r, c) += Y(r0 + r, c) * (D(r0 + r, c) - dot);
        }
      }
    });
  });
}

Var softmax(Var x, Axis axis) {
  if (axis == Axis::rows) return segment_softmax(x, x.rows());
  const Matrix& X = x.value();
  if (X.cols() == 0) throw ShapeError("softmax: empty rows");
  Matrix Y(X.rows(), X.cols());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : X.row(i)) mx = std::max(mx, v);
    double z = 0.0;
    for (std::size_t j = 0; j < X.cols(); ++j) z += (Y(i, j) = std::exp(X(i, j) - mx));
    for (std::size_t j = 0; j < X.cols(); ++j) Y(i, j) /= z;
  }
  const std::size_t ix = x.id;
  return x.tape->record(std::move(Y), {x}, [ix](Tape& t, std::size_t self) {
    const Matrix& D = t.grad(self);
    const Matrix& Y = t.value(self);
    accumulate(t, ix, [&](Matrix& d) {
      for (std::size_t i = 0; i < Y.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < Y.cols(); ++j) dot += Y(i, j) * D(i, j);
        for (std::size_t j = 0; j < Y.cols(); ++j) d(i, j) += Y(i, j) * (D(i, j) - dot);
      }
    });
  });
}

Var segment_sum(Var x, std::size_t group) {
  const Matrix& X = x.value();
  require_group("segment_sum", X, group);
  const std::size_t C = X.cols(), G = X.rows() / group;
  Matrix Y(G, C);
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t r = 0; r < group; ++r)
      for (std::size_t c = 0; c < C; ++c) Y(g, c) += X(g * group + r, c);
  const std::size_t ix = x.id;
  return x.tape->record(std::move(Y), {x}, [ix, group, G, C](Tape& t, std::size_t self) {
    const Matrix& D = t.grad(self);
    accumulate(t, ix, [&](Matrix& d) {
      for (std::size_t g = 0; g < G; ++g)
        for (std::size_t r = 0; r < group; ++r)
          for (std::size_t c = 0; c < C; ++c) d(g * group + r, c) += D(g, c);
    });
  });
}

Var segment_max(Var x, std::size_t group) {
  const Matrix& X = x.value();
  require_group("segment_max", X, group);
  const std::size_t C = X.cols(), G = X.rows() / group;
  Matrix Y(G, C);
  std::vector<std::size_t> arg(G * C);
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t c = 0; c < C; ++c) {
      std::size_t best = g * group;
      for (std::size_t r = 1; r < group; ++r)
        if (X(g * group + r, c) > X(best, c)) best = g * group + r;
      Y(g, c) = X(best, c);
      arg[g * C + c] = best;
    }
  const std::size_t ix = x.id;
  return x.tape->record(std::move(Y), {x},
                        [ix, G, C, arg = std::move(arg)](Tape& t, std::size_t self) {
                          const Matrix& D = t.grad(self);
                          accumulate(t, ix, [&](Matrix& d) {
                            for (std::size_t g = 0; g < G; ++g)
                              for (std::size_t c = 0; c < C; ++c)
                                d(arg[g * C + c], c) += D(g, c);
                          });
                        });
}

Var gather_rows(Var x, std::span<const std::size_t> indices) {
  const Matrix& X = x.value();
  const std::size_t C = X.cols();
  Matrix Y(indices.size(), C);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= X.rows())
      throw ShapeError("gather_rows: index " + std::to_string(indices[r]) +
                       " out of range for " + X.shape_string());
    std::copy_n(&X(indices[r], 0), C, &Y(r, 0));
  }
  const std::size_t ix = x.id;
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return x.tape->record(std::move(Y), {x}, [ix, C, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Matrix& D = t.grad(self);
    accumulate(t, ix, [&](Matrix& d) {
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < C; ++c) d(idx[r], c) += D(r, c);
    });
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t R = parts[0].rows();
  std::size_t C = 0;
  for (const Var& p : parts) {
    if (p.rows() != R) throw ShapeError("concat_cols: row count mismatch");
    C += p.cols();
  }
  Matrix Y(R, C);
  std::vector<std::pair<std::size_t, std::size_t>> layout;  // (id, column offset)
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Matrix& P = p.value();
    for (std::size_t i = 0; i < R; ++i) std::copy_n(&P(i, 0), P.cols(), &Y(i, off));
    layout.emplace_back(p.id, off);
    off += P.cols();
  }
  return parts[0].tape->record(std::move(Y), parts,
                               [layout = std::move(layout)](Tape& t, std::size_t self) {
                                 const Matrix& D = t.grad(self);
                                 for (auto [id, off] : layout)
                                   accumulate(t, id, [&](Matrix& d) {
                                     for (std::size_t i = 0; i < d.rows(); ++i)
                                       for (std::size_t j = 0; j < d.cols(); ++j)
                                         d(i, j) += D(i, off + j);
                                   });
                               });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  const Matrix& X = x.value();
  if (begin + count > X.cols() || count == 0)
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", +" + std::to_string(count) +
                     ") outside " + X.shape_string());
  Matrix Y(X.rows(), count);
  for (std::size_t i = 0; i < X.rows(); ++i) std::copy_n(&X(i, begin), count, &Y(i, 0));
  const std::size_t ix = x.id;
  return x.tape->record(std::move(Y), {x}, [ix, begin, count](Tape& t, std::size_t self) {
    const Matrix& D = t.grad(self);
    accumulate(t, ix, [&](Matrix& d) {
      for (std::size_t i = 0; i < D.rows(); ++i)
        for (std::size_t j = 0; j < count; ++j) d(i, begin + j) += D(i, j);
    });
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const std::size_t ix = x.id;
  return x.tape->record(Matrix(1, 1, s), {x}, [ix](Tape& t, std::size_t self) {
    const double g = t.grad(self)(0, 0);
    accumulate(t, ix, [&](Matrix& d) {
      for (double& v : d.values()) v += g;
    });
  });
}

Var mean(Var x) {
  if (x.value().size() == 0) throw ShapeError("mean: empty operand");
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var smooth_l1(Var x, double delta) {
  Matrix Y = x.value();
  for (double& v : Y.values()) {
    const double a = std::abs(v);
    v = a < delta ? 0.5 * v * v / delta : a - 0.5 * delta;
  }
  const std::size_t ix = x.id;
  return x.tape->record(std::move(Y), {x}, [ix, delta](Tape& t, std::size_t self) {
    const Matrix& G = t.grad(self);
    accumulate(t, ix, [&](Matrix& d) {
      const Matrix& X = t.value(ix);
      for (std::size_t k = 0; k < G.size(); ++k) {
        const double v = X[k];
        const double dv = std::abs(v) < delta ? v / delta : (v > 0 ? 1.0 : -1.0);
        d[k] += G[k] * dv;
      }
    });
  });
}

Var wrap_angles(Var x) {
  Matrix Y = x.value();
  for (double& v : Y.values()) v = wrap_angle(v);
  const std::size_t ix = x.id;
  return x.tape->record(std::move(Y), {x}, [ix](Tape& t, std::size_t self) {
    const Matrix& G = t.grad(self);
    accumulate(t, ix, [&](Matrix& d) {
      for (std::size_t k = 0; k < G.size(); ++k) d[k] += G[k];
    });
  });
}

Var binary_cross_entropy(Var p, const Matrix& targets, double clamp) {
  const Matrix& P = p.value();
  require_same_shape("binary_cross_entropy", P, targets);
  Matrix Y(P.rows(), P.cols());
  std::size_t clamped = 0;
  for (std::size_t k = 0; k < P.size(); ++k) {
    const double pc = std::clamp(P[k], clamp, 1.0 - clamp);
    if (pc != P[k]) ++clamped;
    Y[k] = -(targets[k] * std::log(pc) + (1.0 - targets[k]) * std::log(1.0 - pc));
  }
  if (clamped)
    debug_warn("binary_cross_entropy: clamped " + std::to_string(clamped) +
               " probabilities to [" + std::to_string(clamp) + ", 1-" + std::to_string(clamp) + "]");
  const std::size_t ip = p.id;
  return p.tape->record(std::move(Y), {p}, [ip, targets, clamp](Tape& t, std::size_t self) {
    const Matrix& G = t.grad(self);
    accumulate(t, ip, [&](Matrix& d) {
      const Matrix& P = t.value(ip);
      for (std::size_t k = 0; k < G.size(); ++k) {
        const double pk = P[k];
        if (pk < clamp || pk > 1.0 - clamp) continue;
        d[k] += G[k] * (pk - targets[k]) / (pk * (1.0 - pk));
      }
    });
  });
}

// ---------------------------------------------------------------------------
// Layers

Var linear(Var x, ParamStore& store, const std::string& prefix) {
  Tape& t = *x.tape;
  Var w = t.parameter(store, prefix + ".w");
  Var b = t.parameter(store, prefix + ".b");
  if (x.cols() != w.rows())
    throw ShapeError("linear '" + prefix + "': input " + x.value().shape_string() +
                     " vs weight " + w.value().shape_string());
  return add_row(matmul(x, w), b);
}

void init_linear(ParamStore& store, const std::string& prefix, std::size_t in,
                 std::size_t out, std::mt19937_64& rng) {
  store.add_uniform(prefix + ".w", in, out, in, rng);
  store.add_uniform(prefix + ".b", 1, out, in, rng);
}

const char* to_string(NormKind kind) noexcept {
  switch (kind) {
    case NormKind::none: return "none";
    case NormKind::layer: return "layer";
    case NormKind::batch: return "batch";
  }
  return "none";
}

NormKind parse_norm_kind(std::string_view text) {
  if (text == "none") return NormKind::none;
  if (text == "layer") return NormKind::layer;
  if (text == "batch") return NormKind::batch;
  throw ConfigError("unknown normalization kind '" + std::string(text) + "'");
}

void MlpSpec::validate() const {
  if (in == 0) throw ConfigError("MlpSpec: zero input width");
  if (layers.empty()) throw ConfigError("MlpSpec: needs at least one layer");
  for (const auto& l : layers)
    if (l.width == 0) throw ConfigError("MlpSpec: zero layer width");
}

MlpSpec MlpSpec::two_layer_relu(std::size_t in, std::size_t hidden, std::size_t out) {
  return MlpSpec{in,
                 {{hidden, NormKind::none, Activation::relu}, {out, NormKind::none, Activation::none}}};
}

MlpSpec MlpSpec::three_layer(std::size_t in, std::size_t hidden1, std::size_t hidden2,
                             std::size_t out, NormKind norm) {
  return MlpSpec{in,
                 {{hidden1, norm, Activation::relu},
                  {hidden2, norm, Activation::relu},
                  {out, NormKind::none, Activation::none}}};
}

namespace {
std::string layer_prefix(const std::string& prefix, std::size_t i) {
  return prefix + ".l" + std::to_string(i);
}
}  // namespace

void init_mlp(ParamStore& store, const std::string& prefix, const MlpSpec& spec,
              std::mt19937_64& rng) {
  spec.validate();
  std::size_t in = spec.in;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    const std::string lp = layer_prefix(prefix, i);
    init_linear(store, lp, in, layer.width, rng);
    if (layer.norm != NormKind::none) {
      store.add(lp + ".norm.g", 1, layer.width).value.fill(1.0);
      store.add(lp + ".norm.b", 1, layer.width);
    }
    in = layer.width;
  }
}

Var mlp_forward(Var x, const MlpSpec& spec, ParamStore& store, const std::string& prefix) {
  spec.validate();
  if (x.cols() != spec.in)
    throw ShapeError("mlp '" + prefix + "': input width " + std::to_string(x.cols()) +
                     " != " + std::to_string(spec.in));
  Tape& t = *x.tape;
  Var h = x;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    const std::string lp = layer_prefix(prefix, i);
    h = linear(h, store, lp);
    if (layer.norm != NormKind::none) {
      Var g = t.parameter(store, lp + ".norm.g");
      Var b = t.parameter(store, lp + ".norm.b");
      h = layer.norm == NormKind::layer ? layer_norm(h, g, b) : batch_norm(h, g, b);
    }
    if (layer.activation == Activation::relu) h = relu(h);
  }
  return h;
}

}  // namespace gltt
