#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asymloss/core.hpp"

namespace asymloss {

enum class LossKind {
  ce,          // -log p_y
  focal,       // -(1 - p_y)^gamma log p_y
  mae,         // sum_k |e_k - p_k|
  mse,         // AMSE with a = 1, q = 2
  rce,         // -A sum_{k != y} p_k, log(0) replaced by A < 0
  normalized,  // base(p, y) / sum_k base(p, k)
  amse,        // (1/K) sum_k |a e_k - p_k|^q
  apl,         // alpha * active + beta * passive
};

/// Closed description of a loss. Composite kinds keep their children in
/// `parts`: one entry (the base) for `normalized`, two (active, passive) for
/// `apl`. Build through the factory functions; they validate parameters.
struct LossSpec {
  LossKind kind = LossKind::ce;
  double gamma = 0.5;
  double a = 1.0;
  double q = 2.0;
  double A = -4.0;
  double alpha = 1.0;
  double beta = 1.0;
  std::vector<LossSpec> parts{};

  static LossSpec ce();
  static LossSpec focal(double gamma = 0.5);
  static LossSpec mae();
  static LossSpec mse();
  static LossSpec rce(double A = -4.0);
  static LossSpec amse(double a, double q = 2.0);
  static LossSpec normalized(LossSpec base);
  static LossSpec apl(double alpha, LossSpec active, double beta, LossSpec passive);

  static LossSpec nce() { return normalized(ce()); }
  static LossSpec nfl(double gamma = 0.5) { return normalized(focal(gamma)); }

  // Throws ErrorKind::config if any parameter is outside its domain.
  void validate() const;

  const LossSpec& base() const { return parts.at(0); }
  const LossSpec& active() const { return parts.at(0); }
  const LossSpec& passive() const { return parts.at(1); }

  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

struct LossTaxonomy {
  bool is_active = false;
  bool is_passive = false;
  bool is_symmetric = false;
};

LossTaxonomy taxonomy(const LossSpec& spec);

/// Display name: CE, FL, MAE, MSE, RCE, AMSE, NCE, NFL, JAL-CE, JAL-FL, or a
/// structural name like "APL(NCE,MAE)" / "Norm(AMSE)".
std::string loss_name(const LossSpec& spec);
/// loss_name, plus the magnitude when the loss has an AMSE term ("JAL-CE a=10").
std::string loss_label(const LossSpec& spec);

// True if evaluation involves a logarithm and therefore clamps its input.
bool uses_log(const LossSpec& spec);

/// Loss value on a validated simplex point. Log-based components see
/// clamp_simplex(p, 1e-7); polynomial components see p unchanged.
double loss_value(const LossSpec& spec, const ProbVector& p, ClassLabel y);

/// Entry k is loss_value(spec, p, k).
std::vector<double> loss_row(const LossSpec& spec, const ProbVector& p);

/// Per-coordinate terms l(p_k, e_k) whose sum is the loss. Used to check the
/// active/passive definitions directly.
std::vector<double> loss_terms(const LossSpec& spec, const ProbVector& p, ClassLabel y);

/// Gradient of the loss with respect to the entries of p (treated as free
/// coordinates, not constrained to the simplex). sign(0) = 0 at kinks; for
/// q < 1 a zero residual raises ErrorKind::numeric.
std::vector<double> loss_grad_p(const LossSpec& spec, const ProbVector& p, ClassLabel y);

/// Gradient with respect to logits z, where p = softmax(z).
std::vector<double> loss_grad_logits(const LossSpec& spec, std::span<const double> logits,
                                     ClassLabel y);

/// Loss value evaluated on an arbitrary positive vector, with no clamping and
/// no simplex check. This is the function loss_grad_p differentiates and is
/// what finite-difference checks should perturb.
double loss_value_unclamped(const LossSpec& spec, std::span<const double> p, std::size_t y);

/// Unclamped analytic gradient; companion to loss_value_unclamped.
void loss_grad_unclamped(const LossSpec& spec, std::span<const double> p, std::size_t y,
                         std::span<double> grad);

enum class JalFlavor { ce, focal };

/// JAL-CE = alpha * NCE + beta * AMSE(a, q); JAL-FL uses NFL(gamma).
LossSpec make_jal(JalFlavor flavor, double alpha, double beta, double a, double gamma = 0.5,
                  double q = 2.0);

/// JSON form {"kind": ..., "params": {...}}. from_json also accepts the
/// shorthands "nce", "nfl", "jal_ce", "jal_fl"; missing parameters come from
/// shorthand_defaults().
nlohmann::json to_json(const LossSpec& spec);
LossSpec loss_from_json(const nlohmann::json& j);

/// Magnitude used when a shorthand ("amse", "jal-ce", "jal-fl") omits `a`.
inline constexpr double kShorthandMagnitude = 30.0;

/// Parameter defaults for shorthand names: struct defaults, a = kShorthandMagnitude.
LossSpec shorthand_defaults();

/// Parses a CLI loss argument: either a shorthand name ("ce", "jal-ce",
/// "amse", ...) with parameters taken from `defaults`, or inline JSON.
LossSpec parse_loss_arg(const std::string& text, const LossSpec& defaults = shorthand_defaults());

}  // namespace asymloss
