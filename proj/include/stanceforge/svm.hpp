// Linear soft-margin SVM trained with sequential minimal optimization.
//
// The trainer follows Platt's SMO: the outer loop alternates full sweeps with
// sweeps over the non-bound multipliers; the second multiplier is chosen to
// maximize |E1 - E2|, with randomized fallbacks over the non-bound and then
// the full set. The kernel is the plain dot product, so an explicit weight
// vector is maintained and the decision function is f(x) = w.x - b.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "stanceforge/error.hpp"
#include "stanceforge/features.hpp"
#include "stanceforge/random.hpp"

namespace stanceforge::svm {

using features::FeatureVector;

struct SvmParams {
  double c = 1.0;
  double tolerance = 1e-3;
  double eps = 1e-12;
  int max_passes = 200;
  std::uint64_t seed = 1;
  // Once the KKT conditions hold, the tolerance is tightened tenfold until
  // primal - dual <= gap_tolerance * (1 + |dual|).
  double gap_tolerance = 1e-3;

  void validate() const {
    if (!(c > 0) || !(tolerance > 0) || !(eps > 0) || max_passes <= 0 || !(gap_tolerance > 0))
      throw Error(ErrorKind::InvalidArgument,
                  "SVM parameters must satisfy c > 0, tolerance > 0, eps > 0, max_passes > 0, "
                  "gap_tolerance > 0");
  }
};

struct SvmModel {
  std::vector<double> weights;
  double bias = 0;
  std::vector<double> alphas;  // one per training example, in [0, C]
  std::size_t support_count = 0;
  bool converged = true;
  std::size_t full_passes = 0;
  std::size_t steps = 0;

  std::size_t dimension() const { return weights.size(); }
};

inline double dot(const std::vector<double>& w, const FeatureVector& x) {
  double s = 0;
  for (std::size_t k = 0; k < x.indices.size(); ++k)
    if (x.indices[k] < w.size()) s += w[x.indices[k]] * x.value(k);
  return s;
}

/// Sparse dot product of two vectors with sorted indices.
inline double dot(const FeatureVector& a, const FeatureVector& b) {
  double s = 0;
  std::size_t i = 0, j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) ++i;
    else if (a.indices[i] > b.indices[j]) ++j;
    else s += a.value(i++) * b.value(j++);
  }
  return s;
}

/// w.x - b; positive means Favor.
inline double decision(const SvmModel& model, const FeatureVector& x) {
  return dot(model.weights, x) - model.bias;
}

/// Favor iff decision >= 0, so an exact tie goes to Favor.
inline StanceLabel predict(const SvmModel& model, const FeatureVector& x) {
  return decision(model, x) >= 0 ? StanceLabel::Favor : StanceLabel::Against;
}

namespace detail {

inline void check_data(std::span<const FeatureVector> data) {
  if (data.empty()) throw Error(ErrorKind::SingleClass, "no training examples");
  const std::size_t dim = data.front().dimension;
  bool pos = false, neg = false;
  for (const auto& x : data) {
    if (x.dimension != dim)
      throw Error(ErrorKind::DimensionMismatch, "training vectors have different dimensions");
    if (!x.values.empty() && x.values.size() != x.indices.size())
      throw Error(ErrorKind::DimensionMismatch, "values and indices differ in length");
    for (std::size_t k = 0; k < x.indices.size(); ++k) {
      if (x.indices[k] >= dim)
        throw Error(ErrorKind::DimensionMismatch, "feature index outside the vector dimension");
      if (k > 0 && x.indices[k] <= x.indices[k - 1])
        throw Error(ErrorKind::DimensionMismatch, "feature indices must be strictly increasing");
    }
    if (x.label == +1) pos = true;
    else if (x.label == -1) neg = true;
    else throw Error(ErrorKind::InvalidArgument, "labels must be +1 or -1");
  }
  if (!pos || !neg)
    throw Error(ErrorKind::SingleClass, "training data must contain both classes");
}

class Smo {
 public:
  Smo(std::span<const FeatureVector> data, const SvmParams& p)
      : x_(data), p_(p), n_(data.size()), rng_(p.seed) {
    alpha_.assign(n_, 0.0);
    w_.assign(data.front().dimension, 0.0);
    scratch_.assign(w_.size(), 0.0);
    y_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) y_[i] = x_[i].label;
    self_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) self_[i] = dot(x_[i], x_[i]);
    error_.resize(n_);
    refresh_errors();
  }

  SvmModel run() {
    bool examine_all = true;
    std::size_t changed = 0;
    std::size_t bound_sweeps = 0;
    bool converged = false;
    while (true) {
      changed = 0;
      if (examine_all) {
        if (full_passes_ == static_cast<std::size_t>(p_.max_passes)) break;
        ++full_passes_;
        for (std::size_t i = 0; i < n_; ++i) changed += examine(i);
      } else {
        ++bound_sweeps;
        for (std::size_t i = 0; i < n_; ++i)
          if (non_bound(i)) changed += examine(i);
      }
      if (examine_all) {
        if (changed == 0) {
          settle_bias();
          if (gap_ok() || tol_ <= kMinTolerance) {
            converged = true;
            break;
          }
          tol_ = std::max(tol_ * 0.1, kMinTolerance);
          continue;
        }
        examine_all = false;
        bound_sweeps = 0;
      } else if (changed == 0 || bound_sweeps > 10 * n_ + 1000) {
        examine_all = true;
      }
    }
    return finish(converged);
  }

 private:
  static constexpr double kMinTolerance = 1e-9;

  // Primal and dual objectives from the maintained w and a fresh error cache.
  bool gap_ok() {
    refresh_errors();
    double norm = 0, sum = 0, hinge = 0;
    for (double v : w_) norm += v * v;
    for (std::size_t i = 0; i < n_; ++i) {
      sum += alpha_[i];
      hinge += std::max(0.0, -y_[i] * error_[i]);
    }
    const double dual = sum - 0.5 * norm;
    const double primal = 0.5 * norm + p_.c * hinge;
    return primal - dual <= p_.gap_tolerance * (1 + std::fabs(dual));
  }

  bool non_bound(std::size_t i) const { return alpha_[i] > 0 && alpha_[i] < p_.c; }

  void refresh_errors() {
    for (std::size_t i = 0; i < n_; ++i) error_[i] = dot(w_, x_[i]) - b_ - y_[i];
    updates_since_refresh_ = 0;
  }

  double kernel(std::size_t i, std::size_t j) const { return dot(x_[i], x_[j]); }

  bool step(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    const double alph1 = alpha_[i1], alph2 = alpha_[i2];
    const int y1 = y_[i1], y2 = y_[i2];
    const double e1 = error_[i1], e2 = error_[i2];
    const double s = y1 * y2;
    const double c = p_.c;

    double lo, hi;
    if (y1 != y2) {
      lo = std::max(0.0, alph2 - alph1);
      hi = std::min(c, c + alph2 - alph1);
    } else {
      lo = std::max(0.0, alph1 + alph2 - c);
      hi = std::min(c, alph1 + alph2);
    }
    if (lo >= hi) return false;

    const double k11 = self_[i1], k22 = self_[i2], k12 = kernel(i1, i2);
    const double eta = k11 + k22 - 2 * k12;
    double a2;
    if (eta > 0) {
      a2 = alph2 + y2 * (e1 - e2) / eta;
      a2 = std::clamp(a2, lo, hi);
    } else {
      // Objective restricted to the segment is linear: pick the better end.
      const double f1 = y1 * (e1 + b_) - alph1 * k11 - s * alph2 * k12;
      const double f2 = y2 * (e2 + b_) - s * alph1 * k12 - alph2 * k22;
      const double l1 = alph1 + s * (alph2 - lo);
      const double h1 = alph1 + s * (alph2 - hi);
      const double lobj = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                          s * lo * l1 * k12;
      const double hobj = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                          s * hi * h1 * k12;
      if (lobj < hobj - p_.eps) a2 = lo;
      else if (lobj > hobj + p_.eps) a2 = hi;
      else a2 = alph2;
    }
    const double snap = 1e-10 * c;
    if (a2 < snap) a2 = 0;
    else if (a2 > c - snap) a2 = c;
    if (std::fabs(a2 - alph2) < p_.eps * (a2 + alph2 + p_.eps)) return false;

    double a1 = alph1 + s * (alph2 - a2);
    if (a1 < snap) a1 = 0;
    else if (a1 > c - snap) a1 = c;

    const double d1 = y1 * (a1 - alph1), d2 = y2 * (a2 - alph2);
    const double b1 = e1 + d1 * k11 + d2 * k12 + b_;
    const double b2 = e2 + d1 * k12 + d2 * k22 + b_;
    double b_new;
    if (a1 > 0 && a1 < c) b_new = b1;
    else if (a2 > 0 && a2 < c) b_new = b2;
    else b_new = 0.5 * (b1 + b2);

    // w += d1 x1 + d2 x2, staged in a dense scratch to update every error.
    const auto stage = [&](const FeatureVector& x, double d) {
      for (std::size_t k = 0; k < x.indices.size(); ++k) {
        scratch_[x.indices[k]] += d * x.value(k);
        w_[x.indices[k]] += d * x.value(k);
      }
    };
    stage(x_[i1], d1);
    stage(x_[i2], d2);
    const double db = b_new - b_;
    b_ = b_new;
    alpha_[i1] = a1;
    alpha_[i2] = a2;
    ++steps_;

    if (++updates_since_refresh_ >= 1000) {
      refresh_errors();
    } else {
      for (std::size_t k = 0; k < n_; ++k) error_[k] += dot(scratch_, x_[k]) - db;
    }
    const auto unstage = [&](const FeatureVector& x) {
      for (auto idx : x.indices) scratch_[idx] = 0.0;
    };
    unstage(x_[i1]);
    unstage(x_[i2]);
    return true;
  }

  std::size_t examine(std::size_t i2) {
    const double r2 = error_[i2] * y_[i2];
    if (!((r2 < -tol_ && alpha_[i2] < p_.c) || (r2 > tol_ && alpha_[i2] > 0)))
      return 0;

    std::size_t best = n_;
    double best_gap = -1;
    std::size_t nb = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!non_bound(i)) continue;
      ++nb;
      const double gap = std::fabs(error_[i] - error_[i2]);
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (nb > 1 && best != n_ && step(best, i2)) return 1;

    std::size_t start = uniform_index(rng_, n_);
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t i1 = (start + k) % n_;
      if (non_bound(i1) && step(i1, i2)) return 1;
    }
    start = uniform_index(rng_, n_);
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t i1 = (start + k) % n_;
      if (step(i1, i2)) return 1;
    }
    return 0;
  }

  // With every multiplier at a bound the threshold is only pinned to an
  // interval; take its midpoint.
  void settle_bias() {
    bool any_free = false;
    for (std::size_t i = 0; i < n_; ++i) any_free = any_free || non_bound(i);
    if (!any_free) {
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n_; ++i) {
        const double u = dot(w_, x_[i]);
        const bool at_zero = alpha_[i] == 0;
        // y(u - b) >= 1 at zero, <= 1 at C.
        if ((y_[i] > 0) == at_zero) hi = std::min(hi, u - y_[i]);
        else lo = std::max(lo, u - y_[i]);
      }
      if (std::isfinite(lo) && std::isfinite(hi)) b_ = 0.5 * (lo + hi);
      else if (std::isfinite(lo)) b_ = lo;
      else if (std::isfinite(hi)) b_ = hi;
    }
    refresh_errors();
  }

  SvmModel finish(bool converged) {
    if (!converged) settle_bias();
    SvmModel m;
    m.weights = w_;
    m.bias = b_;
    m.alphas = alpha_;
    m.support_count =
        static_cast<std::size_t>(std::count_if(alpha_.begin(), alpha_.end(), [](double a) {
          return a > 0;
        }));
    m.converged = converged;
    m.full_passes = full_passes_;
    m.steps = steps_;
    return m;
  }

  std::span<const FeatureVector> x_;
  SvmParams p_;
  std::size_t n_;
  std::mt19937_64 rng_;
  std::vector<int> y_;
  std::vector<double> alpha_, w_, scratch_, self_, error_;
  double b_ = 0;
  double tol_ = p_.tolerance;
  std::size_t full_passes_ = 0, steps_ = 0, updates_since_refresh_ = 0;
};

}  // namespace detail

/// Trains on `data`. Throws Error on single-class input or inconsistent
/// dimensions. When `max_passes` full sweeps still change multipliers the
/// last iterate is returned with `converged == false`.
inline SvmModel train(std::span<const FeatureVector> data, const SvmParams& params = {}) {
  params.validate();
  detail::check_data(data);
  return detail::Smo(data, params).run();
}

// ---------------------------------------------------------------------------
// Certificates. These recompute everything from the multipliers and never
// look at the trainer's error cache.

inline std::vector<double> weights_from_alphas(std::span<const FeatureVector> data,
                                               std::span<const double> alphas) {
  std::vector<double> w(data.empty() ? 0 : data.front().dimension, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t k = 0; k < data[i].indices.size(); ++k)
      w[data[i].indices[k]] += alphas[i] * data[i].label * data[i].value(k);
  return w;
}

/// sum(alpha) - 0.5 |w|^2 with w rebuilt from the multipliers.
inline double dual_objective(std::span<const FeatureVector> data, std::span<const double> alphas) {
  const auto w = weights_from_alphas(data, alphas);
  double sum = 0, norm = 0;
  for (double a : alphas) sum += a;
  for (double v : w) norm += v * v;
  return sum - 0.5 * norm;
}

/// 0.5 |w|^2 + C sum(max(0, 1 - y f(x))).
inline double primal_objective(const SvmModel& m, std::span<const FeatureVector> data, double c) {
  double norm = 0, hinge = 0;
  for (double v : m.weights) norm += v * v;
  for (const auto& x : data) hinge += std::max(0.0, 1.0 - x.label * decision(m, x));
  return 0.5 * norm + c * hinge;
}

struct KktReport {
  bool ok = false;
  double box_violation = 0;       // how far any alpha leaves [0, C]
  double equality_residual = 0;   // |sum alpha y|
  double weight_residual = 0;     // max |w - sum alpha y x|
  double margin_violation = 0;    // worst KKT margin violation
  std::size_t worst_example = 0;
  double duality_gap = 0;
  double dual = 0;
  double primal = 0;
};

/// Independent optimality certificate for a trained model.
inline KktReport verify_kkt(const SvmModel& m, std::span<const FeatureVector> data, double c,
                            double tolerance) {
  KktReport r;
  double eq = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double a = m.alphas.at(i);
    r.box_violation = std::max({r.box_violation, -a, a - c});
    eq += a * data[i].label;
  }
  r.equality_residual = std::fabs(eq);
  const auto w = weights_from_alphas(data, m.alphas);
  for (std::size_t k = 0; k < w.size(); ++k)
    r.weight_residual = std::max(r.weight_residual, std::fabs(w[k] - m.weights.at(k)));

  SvmModel rebuilt{w, m.bias, {}, 0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double margin = data[i].label * decision(rebuilt, data[i]);
    const double a = m.alphas[i];
    double v = 0;
    if (a <= 0) v = (1 - tolerance) - margin;
    else if (a >= c) v = margin - (1 + tolerance);
    else v = std::fabs(margin - 1) - tolerance;
    if (v > r.margin_violation) {
      r.margin_violation = v;
      r.worst_example = i;
    }
  }
  r.dual = dual_objective(data, m.alphas);
  r.primal = primal_objective(rebuilt, data, c);
  r.duality_gap = r.primal - r.dual;
  r.ok = r.box_violation <= 0 && r.equality_residual <= 1e-8 && r.weight_residual <= 1e-8 &&
         r.margin_violation <= 0;
  return r;
}

// ---------------------------------------------------------------------------
// Text serialization: `svm-linear v1 dim=<n> b=<float>` followed by one
// `idx:weight` line per nonzero weight, shortest round-trip decimals.

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_model(const SvmModel& m, std::ostream& out) {
  out << "svm-linear v1 dim=" << m.weights.size() << " b=" << format_double(m.bias) << '\n';
  for (std::size_t k = 0; k < m.weights.size(); ++k)
    if (m.weights[k] != 0.0) out << k << ':' << format_double(m.weights[k]) << '\n';
}

inline SvmModel read_model(std::istream& in) {
  const auto parse_double = [](std::string_view s) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw Error(ErrorKind::Malformed, "bad number '" + std::string(s) + "'");
    return v;
  };
  const auto parse_size = [](std::string_view s) {
    std::size_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw Error(ErrorKind::Malformed, "bad index '" + std::string(s) + "'");
    return v;
  };

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Malformed, "empty model file", 1);
  std::istringstream header(line);
  std::string magic, version, dim, bias;
  header >> magic >> version >> dim >> bias;
  if (magic != "svm-linear" || version != "v1" || dim.rfind("dim=", 0) != 0 ||
      bias.rfind("b=", 0) != 0)
    throw Error(ErrorKind::Malformed, "bad model header", 1);

  SvmModel m;
  m.weights.assign(parse_size(std::string_view(dim).substr(4)), 0.0);
  m.bias = parse_double(std::string_view(bias).substr(2));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::Malformed, "expected idx:weight", lineno);
    const std::size_t idx = parse_size(std::string_view(line).substr(0, colon));
    if (idx >= m.weights.size())
      throw Error(ErrorKind::DimensionMismatch, "weight index beyond dim", lineno);
    m.weights[idx] = parse_double(std::string_view(line).substr(colon + 1));
  }
  return m;
}

}  // namespace stanceforge::svm
