#include "asymloss/losses.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "asymloss/error.hpp"

namespace asymloss {

namespace {

double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

// d/dr |r|^q = q * sign(r) * |r|^(q-1); returns the sign(r)|r|^(q-1) factor.
double signed_pow(double r, double q) {
  if (r == 0.0) {
    if (q < 1.0) raise(ErrorKind::numeric, "AMSE gradient is singular at a zero residual for q < 1");
    return 0.0;
  }
  return sign(r) * std::pow(std::abs(r), q - 1.0);
}

double focal_value(double p, double gamma) { return -std::pow(1.0 - p, gamma) * std::log(p); }

double focal_deriv(double p, double gamma) {
  const double keep = std::pow(1.0 - p, gamma);
  if (gamma == 0.0) return -1.0 / p;
  return gamma * std::pow(1.0 - p, gamma - 1.0) * std::log(p) - keep / p;
}

bool is_leaf(LossKind kind) {
  return kind != LossKind::normalized && kind != LossKind::apl;
}

// Per-class value of a leaf loss. `sum_abs_q` and `total` are precomputed
// sums over p so a full row costs O(K).
struct LeafSums {
  double total = 0.0;      // sum p_k
  double sum_abs = 0.0;    // sum |p_k|
  double sum_abs_q = 0.0;  // sum |p_k|^q (AMSE/MSE)
};

LeafSums leaf_sums(const LossSpec& spec, std::span<const double> p) {
  LeafSums s;
  const double q = spec.kind == LossKind::mse ? 2.0 : spec.q;
  for (double v : p) {
    s.total += v;
    s.sum_abs += std::abs(v);
    if (spec.kind == LossKind::amse || spec.kind == LossKind::mse) s.sum_abs_q += std::pow(std::abs(v), q);
  }
  return s;
}

double leaf_value(const LossSpec& spec, std::span<const double> p, std::size_t y,
                  const LeafSums& s) {
  const double K = static_cast<double>(p.size());
  switch (spec.kind) {
    case LossKind::ce:
      return -std::log(p[y]);
    case LossKind::focal:
      return focal_value(p[y], spec.gamma);
    case LossKind::mae:
      return s.sum_abs - std::abs(p[y]) + std::abs(1.0 - p[y]);
    case LossKind::rce:
      return -spec.A * (s.total - p[y]);
    case LossKind::mse:
    case LossKind::amse: {
      const double a = spec.kind == LossKind::mse ? 1.0 : spec.a;
      const double q = spec.kind == LossKind::mse ? 2.0 : spec.q;
      return (s.sum_abs_q - std::pow(std::abs(p[y]), q) + std::pow(std::abs(a - p[y]), q)) / K;
    }
    default:
      break;
  }
  raise(ErrorKind::config, "leaf_value called on a composite loss");
}

// Gradient of leaf loss at class y: writes grad (size K).
void leaf_grad(const LossSpec& spec, std::span<const double> p, std::size_t y,
               std::span<double> grad) {
  const std::size_t K = p.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  switch (spec.kind) {
    case LossKind::ce:
      grad[y] = -1.0 / p[y];
      return;
    case LossKind::focal:
      grad[y] = focal_deriv(p[y], spec.gamma);
      return;
    case LossKind::mae:
      for (std::size_t k = 0; k < K; ++k) grad[k] = sign(p[k] - (k == y ? 1.0 : 0.0));
      return;
    case LossKind::rce:
      for (std::size_t k = 0; k < K; ++k) grad[k] = k == y ? 0.0 : -spec.A;
      return;
    case LossKind::mse:
    case LossKind::amse: {
      const double a = spec.kind == LossKind::mse ? 1.0 : spec.a;
      const double q = spec.kind == LossKind::mse ? 2.0 : spec.q;
      const double scale = q / static_cast<double>(K);
      for (std::size_t k = 0; k < K; ++k) {
        grad[k] = scale * signed_pow(p[k] - (k == y ? a : 0.0), q);
      }
      return;
    }
    default:
      break;
  }
  raise(ErrorKind::config, "leaf_grad called on a composite loss");
}

// Sum over classes k of the gradient of leaf loss L(p, k).
void leaf_grad_row_sum(const LossSpec& spec, std::span<const double> p, std::span<double> out) {
  const std::size_t K = p.size();
  const double Km1 = static_cast<double>(K) - 1.0;
  for (std::size_t j = 0; j < K; ++j) {
    switch (spec.kind) {
      case LossKind::ce:
        out[j] = -1.0 / p[j];
        break;
      case LossKind::focal:
        out[j] = focal_deriv(p[j], spec.gamma);
        break;
      case LossKind::mae:
        out[j] = sign(p[j] - 1.0) + Km1 * sign(p[j]);
        break;
      case LossKind::rce:
        out[j] = -spec.A * Km1;
        break;
      case LossKind::mse:
      case LossKind::amse: {
        const double a = spec.kind == LossKind::mse ? 1.0 : spec.a;
        const double q = spec.kind == LossKind::mse ? 2.0 : spec.q;
        out[j] = q / static_cast<double>(K) * (signed_pow(p[j] - a, q) + Km1 * signed_pow(p[j], q));
        break;
      }
      default:
        raise(ErrorKind::config, "leaf_grad_row_sum called on a composite loss");
    }
  }
}

double row_sum(const LossSpec& base, std::span<const double> p, const LeafSums& s) {
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) total += leaf_value(base, p, k, s);
  return total;
}

void check_label(std::size_t y, std::size_t K) {
  if (y >= K) {
    raise(ErrorKind::invalid_input,
          "label " + std::to_string(y) + " out of range for K=" + std::to_string(K));
  }
}

std::vector<double> maybe_clamped(const LossSpec& spec, std::span<const double> p) {
  std::vector<double> v(p.begin(), p.end());
  if (uses_log(spec)) clamp_simplex_in_place(v);
  return v;
}

}  // namespace

LossSpec LossSpec::ce() { return LossSpec{.kind = LossKind::ce}; }

LossSpec LossSpec::focal(double gamma) {
  LossSpec s{.kind = LossKind::focal, .gamma = gamma};
  s.validate();
  return s;
}

LossSpec LossSpec::mae() { return LossSpec{.kind = LossKind::mae}; }

LossSpec LossSpec::mse() { return LossSpec{.kind = LossKind::mse, .a = 1.0, .q = 2.0}; }

LossSpec LossSpec::rce(double A) {
  LossSpec s{.kind = LossKind::rce, .A = A};
  s.validate();
  return s;
}

LossSpec LossSpec::amse(double a, double q) {
  LossSpec s{.kind = LossKind::amse, .a = a, .q = q};
  s.validate();
  return s;
}

LossSpec LossSpec::normalized(LossSpec base) {
  LossSpec s{.kind = LossKind::normalized};
  s.parts.push_back(std::move(base));
  s.validate();
  return s;
}

LossSpec LossSpec::apl(double alpha, LossSpec active, double beta, LossSpec passive) {
  LossSpec s{.kind = LossKind::apl, .alpha = alpha, .beta = beta};
  s.parts.push_back(std::move(active));
  s.parts.push_back(std::move(passive));
  s.validate();
  return s;
}

void LossSpec::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  switch (kind) {
    case LossKind::ce:
    case LossKind::mae:
    case LossKind::mse:
      break;
    case LossKind::focal:
      if (!finite(gamma) || gamma < 0.0) raise(ErrorKind::config, "focal loss needs gamma >= 0");
      break;
    case LossKind::rce:
      if (!finite(A) || A >= 0.0) raise(ErrorKind::config, "RCE needs a negative log-zero substitute A");
      break;
    case LossKind::amse:
      if (!finite(a) || a < 1.0) raise(ErrorKind::config, "AMSE needs a >= 1");
      if (!finite(q) || q <= 0.0) raise(ErrorKind::config, "AMSE needs q > 0");
      break;
    case LossKind::normalized:
      if (parts.size() != 1) raise(ErrorKind::config, "normalized loss needs exactly one base");
      if (!is_leaf(parts[0].kind)) {
        raise(ErrorKind::config, "normalized loss base must be CE, FL, MAE, MSE, RCE or AMSE");
      }
      parts[0].validate();
      break;
    case LossKind::apl:
      if (parts.size() != 2) raise(ErrorKind::config, "APL combination needs an active and a passive part");
      if (!finite(alpha) || alpha <= 0.0 || !finite(beta) || beta <= 0.0) {
        raise(ErrorKind::config, "APL combination needs alpha > 0 and beta > 0");
      }
      parts[0].validate();
      parts[1].validate();
      break;
  }
}

LossTaxonomy taxonomy(const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::ce:
    case LossKind::focal:
      return {.is_active = true, .is_passive = false, .is_symmetric = false};
    case LossKind::mae:
    case LossKind::rce:
      return {.is_active = false, .is_passive = true, .is_symmetric = true};
    case LossKind::mse:
    case LossKind::amse:
      return {.is_active = false, .is_passive = true, .is_symmetric = false};
    case LossKind::normalized: {
      LossTaxonomy t = taxonomy(spec.base());
      t.is_symmetric = true;
      return t;
    }
    case LossKind::apl: {
      const LossTaxonomy a = taxonomy(spec.active());
      const LossTaxonomy b = taxonomy(spec.passive());
      const bool passive = a.is_passive || b.is_passive;
      return {.is_active = !passive, .is_passive = passive,
              .is_symmetric = a.is_symmetric && b.is_symmetric};
    }
  }
  return {};
}

std::string loss_name(const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::ce: return "CE";
    case LossKind::focal: return "FL";
    case LossKind::mae: return "MAE";
    case LossKind::mse: return "MSE";
    case LossKind::rce: return "RCE";
    case LossKind::amse: return "AMSE";
    case LossKind::normalized:
      if (spec.base().kind == LossKind::ce) return "NCE";
      if (spec.base().kind == LossKind::focal) return "NFL";
      return "Norm(" + loss_name(spec.base()) + ")";
    case LossKind::apl: {
      const std::string active = loss_name(spec.active());
      if (spec.passive().kind == LossKind::amse) {
        if (active == "NCE") return "JAL-CE";
        if (active == "NFL") return "JAL-FL";
      }
      return active + "+" + loss_name(spec.passive());
    }
  }
  return "?";
}

std::string loss_label(const LossSpec& spec) {
  const LossSpec* node = &spec;
  while (node->kind != LossKind::amse && !node->parts.empty()) node = &node->parts.back();
  if (node->kind != LossKind::amse) return loss_name(spec);
  char buf[32];
  std::snprintf(buf, sizeof buf, " a=%g", node->a);
  return loss_name(spec) + buf;
}

bool uses_log(const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::ce:
    case LossKind::focal:
      return true;
    case LossKind::normalized:
      return uses_log(spec.base());
    case LossKind::apl:
      return uses_log(spec.active()) || uses_log(spec.passive());
    default:
      return false;
  }
}

double loss_value_unclamped(const LossSpec& spec, std::span<const double> p, std::size_t y) {
  check_label(y, p.size());
  switch (spec.kind) {
    case LossKind::normalized: {
      const LossSpec& base = spec.base();
      const LeafSums s = leaf_sums(base, p);
      return leaf_value(base, p, y, s) / row_sum(base, p, s);
    }
    case LossKind::apl:
      return spec.alpha * loss_value_unclamped(spec.active(), p, y) +
             spec.beta * loss_value_unclamped(spec.passive(), p, y);
    default:
      return leaf_value(spec, p, y, leaf_sums(spec, p));
  }
}

void loss_grad_unclamped(const LossSpec& spec, std::span<const double> p, std::size_t y,
                         std::span<double> grad) {
  check_label(y, p.size());
  const std::size_t K = p.size();
  switch (spec.kind) {
    case LossKind::normalized: {
      // d(L_y / S) = (dL_y * S - L_y * dS) / S^2 with S = sum_k L_k.
      const LossSpec& base = spec.base();
      const LeafSums s = leaf_sums(base, p);
      const double Ly = leaf_value(base, p, y, s);
      const double S = row_sum(base, p, s);
      std::vector<double> dS(K);
      leaf_grad(base, p, y, grad);
      leaf_grad_row_sum(base, p, dS);
      for (std::size_t j = 0; j < K; ++j) grad[j] = (grad[j] * S - Ly * dS[j]) / (S * S);
      return;
    }
    case LossKind::apl: {
      std::vector<double> tmp(K);
      loss_grad_unclamped(spec.active(), p, y, grad);
      loss_grad_unclamped(spec.passive(), p, y, tmp);
      for (std::size_t j = 0; j < K; ++j) grad[j] = spec.alpha * grad[j] + spec.beta * tmp[j];
      return;
    }
    default:
      leaf_grad(spec, p, y, grad);
  }
}

double loss_value(const LossSpec& spec, const ProbVector& p, ClassLabel y) {
  check_label(y.index, p.size());
  if (spec.kind == LossKind::apl) {
    return spec.alpha * loss_value(spec.active(), p, y) + spec.beta * loss_value(spec.passive(), p, y);
  }
  if (!uses_log(spec)) return loss_value_unclamped(spec, p.values(), y.index);
  const std::vector<double> c = maybe_clamped(spec, p.values());
  return loss_value_unclamped(spec, c, y.index);
}

std::vector<double> loss_row(const LossSpec& spec, const ProbVector& p) {
  std::vector<double> row(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) row[k] = loss_value(spec, p, ClassLabel{k});
  return row;
}

std::vector<double> loss_terms(const LossSpec& spec, const ProbVector& p, ClassLabel y) {
  check_label(y.index, p.size());
  const std::size_t K = p.size();
  std::vector<double> terms(K, 0.0);
  if (spec.kind == LossKind::apl) {
    const auto a = loss_terms(spec.active(), p, y);
    const auto b = loss_terms(spec.passive(), p, y);
    for (std::size_t k = 0; k < K; ++k) terms[k] = spec.alpha * a[k] + spec.beta * b[k];
    return terms;
  }
  const std::vector<double> v = maybe_clamped(spec, p.values());
  const LossSpec& leaf = spec.kind == LossKind::normalized ? spec.base() : spec;
  for (std::size_t k = 0; k < K; ++k) {
    const double e = k == y.index ? 1.0 : 0.0;
    switch (leaf.kind) {
      case LossKind::ce:
        terms[k] = k == y.index ? -std::log(v[k]) : 0.0;
        break;
      case LossKind::focal:
        terms[k] = k == y.index ? focal_value(v[k], leaf.gamma) : 0.0;
        break;
      case LossKind::mae:
        terms[k] = std::abs(e - v[k]);
        break;
      case LossKind::rce:
        terms[k] = k == y.index ? 0.0 : -leaf.A * v[k];
        break;
      case LossKind::mse:
        terms[k] = std::pow(e - v[k], 2.0) / static_cast<double>(K);
        break;
      case LossKind::amse:
        terms[k] = std::pow(std::abs(leaf.a * e - v[k]), leaf.q) / static_cast<double>(K);
        break;
      default:
        raise(ErrorKind::config, "unexpected composite inside normalized loss");
    }
  }
  if (spec.kind == LossKind::normalized) {
    const double S = row_sum(leaf, v, leaf_sums(leaf, v));
    for (double& t : terms) t /= S;
  }
  return terms;
}

std::vector<double> loss_grad_p(const LossSpec& spec, const ProbVector& p, ClassLabel y) {
  check_label(y.index, p.size());
  std::vector<double> grad(p.size());
  if (spec.kind == LossKind::apl) {
    const auto a = loss_grad_p(spec.active(), p, y);
    const auto b = loss_grad_p(spec.passive(), p, y);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = spec.alpha * a[k] + spec.beta * b[k];
    return grad;
  }
  const std::vector<double> v = maybe_clamped(spec, p.values());
  loss_grad_unclamped(spec, v, y.index, grad);
  for (double g : grad) {
    if (!std::isfinite(g)) raise(ErrorKind::numeric, "non-finite gradient for " + loss_name(spec));
  }
  return grad;
}

std::vector<double> loss_grad_logits(const LossSpec& spec, std::span<const double> logits,
                                     ClassLabel y) {
  const ProbVector p = softmax(logits);
  const std::vector<double> gp = loss_grad_p(spec, p, y);
  double dot = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) dot += gp[i] * p[i];
  std::vector<double> g(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) g[j] = p[j] * (gp[j] - dot);
  return g;
}

LossSpec make_jal(JalFlavor flavor, double alpha, double beta, double a, double gamma, double q) {
  LossSpec active = flavor == JalFlavor::ce ? LossSpec::nce() : LossSpec::nfl(gamma);
  return LossSpec::apl(alpha, std::move(active), beta, LossSpec::amse(a, q));
}

}  // namespace asymloss
