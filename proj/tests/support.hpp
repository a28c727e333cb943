#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gltt/diffcore.hpp"
#include "gltt/geometry.hpp"
#include "gltt/glt.hpp"

namespace gltt {

// gtest prints matrices through this on failure.
inline void PrintTo(const Matrix& m, std::ostream* os) {
  *os << m.shape_string() << " {";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    *os << (i ? "; " : "");
    for (std::size_t j = 0; j < m.cols(); ++j) *os << (j ? " " : "") << m(i, j);
  }
  *os << "}";
}

}  // namespace gltt

namespace gltt::test {

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = u(rng);
  return m;
}

inline Matrix random_coords(std::mt19937_64& rng, std::size_t n, double extent = 2.0) {
  return random_matrix(rng, n, 3, -extent, extent);
}

/// Coordinates on a small integer lattice, so exact distance ties are common.
inline Matrix lattice_coords(std::mt19937_64& rng, std::size_t n, int extent = 2) {
  std::uniform_int_distribution<int> u(-extent, extent);
  Matrix m(n, 3);
  for (double& v : m.values()) v = u(rng);
  return m;
}

inline std::vector<std::size_t> random_permutation(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// Row r of the result is row perm[r] of m.
inline Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& perm) {
  Matrix out(perm.size(), m.cols());
  for (std::size_t r = 0; r < perm.size(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(perm[r], c);
  return out;
}

// ---------------------------------------------------------------------------
// Finite differences

struct GradCheckResult {
  bool ok = true;
  std::size_t checked = 0;
  double worst_excess = 0.0;  // |a - n| - (atol + rtol·max(|a|,|n|)), worst case
  std::string worst;          // "<param>[i]: analytic a numeric n"
};

/// Compares analytic parameter gradients of `loss` (built on a fresh tape
/// each call) with central differences. `stride` > 1 checks every
/// stride-th element of each entry.
inline GradCheckResult check_gradients(ParamStore& store, const std::function<Var(Tape&)>& loss,
                                       double rtol, double atol = 1e-7, double h = 1e-5,
                                       std::size_t stride = 1) {
  store.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  std::vector<Matrix> analytic;
  for (std::size_t p = 0; p < store.entry_count(); ++p) analytic.push_back(store.entry(p).grad);

  const auto eval = [&] {
    Tape tape;
    return loss(tape).value()(0, 0);
  };
  GradCheckResult res;
  res.worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < store.entry_count(); ++p) {
    Param& param = store.entry(p);
    auto vals = param.value.values();
    for (std::size_t i = 0; i < vals.size(); i += stride) {
      const double saved = vals[i];
      vals[i] = saved + h;
      const double up = eval();
      vals[i] = saved - h;
      const double down = eval();
      vals[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[p].values()[i];
      const double excess = std::abs(a - numeric) - (atol + rtol * std::max(std::abs(a), std::abs(numeric)));
      ++res.checked;
      if (excess > res.worst_excess) {
        res.worst_excess = excess;
        res.worst = param.name + "[" + std::to_string(i) + "]: analytic " + std::to_string(a) +
                    " numeric " + std::to_string(numeric);
      }
      if (excess > 0) res.ok = false;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Brute-force sampling oracles. They re-derive orderings by repeated
// minimum selection instead of sorting.

inline double oracle_distance(const Matrix& c, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t a = 0; a < 3; ++a) s += (c(i, a) - c(j, a)) * (c(i, a) - c(j, a));
  return std::sqrt(s);
}

/// Row i ordered by (distance, index) via selection.
inline std::vector<std::size_t> oracle_order(const Matrix& c, std::size_t i) {
  const std::size_t M = c.rows();
  std::vector<bool> used(M, false);
  std::vector<std::size_t> order;
  for (std::size_t step = 0; step < M; ++step) {
    std::size_t best = M;
    for (std::size_t j = 0; j < M; ++j) {
      if (used[j]) continue;
      if (best == M || oracle_distance(c, i, j) < oracle_distance(c, i, best)) best = j;
    }
    used[best] = true;
    order.push_back(best);
  }
  return order;
}

inline std::vector<std::size_t> oracle_sparse(const Matrix& c, std::size_t m) {
  const std::size_t M = c.rows(), s = M / m;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < M; ++i) {
    const auto order = oracle_order(c, i);
    for (std::size_t t = 0; t < m; ++t) out.push_back(order[t * s]);
  }
  return out;
}

inline std::vector<std::size_t> oracle_knn(const Matrix& c, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    const auto order = oracle_order(c, i);
    out.insert(out.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  }
  return out;
}

/// Recomputes every point's distance to the whole selected set each round.
inline std::vector<std::size_t> oracle_fps(const Matrix& c, std::size_t count, std::size_t start) {
  std::vector<std::size_t> picked{start};
  while (picked.size() < count) {
    std::size_t best = c.rows();
    double best_d = -1.0;
    for (std::size_t j = 0; j < c.rows(); ++j) {
      if (std::find(picked.begin(), picked.end(), j) != picked.end()) continue;
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t p : picked) d = std::min(d, oracle_distance(c, j, p));
      if (d > best_d) {
        best_d = d;
        best = j;
      }
    }
    picked.push_back(best);
  }
  return picked;
}

// ---------------------------------------------------------------------------
// Dense attention oracle: plain loops over every (i, j) pair, reading the
// block's parameters directly.

using Vec = std::vector<double>;

inline Vec oracle_linear(const Vec& x, const ParamStore& s, const std::string& prefix) {
  const Matrix& w = s.at(prefix + ".w").value;
  const Matrix& b = s.at(prefix + ".b").value;
  Vec y(w.cols());
  for (std::size_t o = 0; o < w.cols(); ++o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) acc += x[i] * w(i, o);
    y[o] = acc + b(0, o);
  }
  return y;
}

inline Vec oracle_relu(Vec x) {
  for (double& v : x) v = std::max(v, 0.0);
  return x;
}

/// Linear → ReLU → Linear under `<prefix>.l0` / `.l1`.
inline Vec oracle_mlp2(const Vec& x, const ParamStore& s, const std::string& prefix) {
  return oracle_linear(oracle_relu(oracle_linear(x, s, prefix + ".l0")), s, prefix + ".l1");
}

inline Vec oracle_layer_norm(const Vec& x, const Matrix& g, const Matrix& b, double eps = 1e-5) {
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(x.size());
  Vec y(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) y[c] = (x[c] - mu) / std::sqrt(var + eps) * g(0, c) + b(0, c);
  return y;
}

/// Transformer block where every seed attends to every seed.
inline Matrix oracle_dense_block(const Matrix& f, const Matrix& coords, const ParamStore& s,
                                 const std::string& prefix) {
  const std::size_t M = f.rows(), D = f.cols();
  const auto row = [](const Matrix& m, std::size_t r) {
    return Vec(m.values().begin() + static_cast<std::ptrdiff_t>(r * m.cols()),
               m.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * m.cols()));
  };
  Matrix out(M, D);
  for (std::size_t i = 0; i < M; ++i) {
    const Vec q = oracle_linear(row(f, i), s, prefix + ".q");
    const std::size_t C = q.size();
    std::vector<Vec> logits(M), vals(M);
    for (std::size_t j = 0; j < M; ++j) {
      const Vec rel{coords(i, 0) - coords(j, 0), coords(i, 1) - coords(j, 1), coords(i, 2) - coords(j, 2)};
      const Vec pos = oracle_mlp2(rel, s, prefix + ".pos");
      const Vec k = oracle_linear(row(f, j), s, prefix + ".k");
      Vec v = oracle_linear(row(f, j), s, prefix + ".v");
      Vec pre(C);
      for (std::size_t c = 0; c < C; ++c) {
        pre[c] = q[c] - k[c] + pos[c];
        v[c] += pos[c];
      }
      logits[j] = oracle_mlp2(pre, s, prefix + ".attn");
      vals[j] = v;
    }
    Vec y(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < M; ++j) mx = std::max(mx, logits[j][c]);
      double z = 0.0;
      for (std::size_t j = 0; j < M; ++j) z += std::exp(logits[j][c] - mx);
      for (std::size_t j = 0; j < M; ++j) y[c] += std::exp(logits[j][c] - mx) / z * vals[j][c];
    }
    Vec res = oracle_linear(y, s, prefix + ".ffn");
    for (std::size_t d = 0; d < D; ++d) res[d] += f(i, d);
    const Vec n = oracle_layer_norm(res, s.at(prefix + ".norm.g").value, s.at(prefix + ".norm.b").value);
    for (std::size_t d = 0; d < D; ++d) out(i, d) = n[d];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Naive loss oracles

inline double oracle_smooth_l1(double x, double delta = 1.0) {
  const double a = std::abs(x);
  return a < delta ? 0.5 * x * x / delta : a - 0.5 * delta;
}

inline double oracle_bce(double p, double y) {
  p = std::clamp(p, 1e-7, 1.0 - 1e-7);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

}  // namespace gltt::test
