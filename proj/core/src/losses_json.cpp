#include <algorithm>
#include <cctype>

#include "asymloss/error.hpp"
#include "asymloss/losses.hpp"

namespace asymloss {

namespace {

using nlohmann::json;

std::string normalize_name(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) {
    return c == '-' ? '_' : static_cast<char>(std::tolower(c));
  });
  return name;
}

double param(const json& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  const json& v = params.at(key);
  if (!v.is_number()) raise(ErrorKind::config, std::string("loss parameter '") + key + "' must be a number");
  return v.get<double>();
}

LossSpec from_name(const std::string& raw, const json& params, const LossSpec& d) {
  const std::string name = normalize_name(raw);
  const double gamma = param(params, "gamma", d.gamma);
  const double a = param(params, "a", d.a);
  const double q = param(params, "q", d.q);
  const double A = param(params, "A", d.A);
  const double alpha = param(params, "alpha", d.alpha);
  const double beta = param(params, "beta", d.beta);

  if (name == "ce") return LossSpec::ce();
  if (name == "fl" || name == "focal") return LossSpec::focal(gamma);
  if (name == "mae") return LossSpec::mae();
  if (name == "mse") return LossSpec::mse();
  if (name == "rce") return LossSpec::rce(A);
  if (name == "amse") return LossSpec::amse(a, q);
  if (name == "nce") return LossSpec::nce();
  if (name == "nfl") return LossSpec::nfl(gamma);
  if (name == "jal_ce") return make_jal(JalFlavor::ce, alpha, beta, a, gamma, q);
  if (name == "jal_fl") return make_jal(JalFlavor::focal, alpha, beta, a, gamma, q);
  if (name == "normalized") {
    if (!params.contains("base")) raise(ErrorKind::config, "normalized loss needs params.base");
    return LossSpec::normalized(loss_from_json(params.at("base")));
  }
  if (name == "apl") {
    if (!params.contains("active") || !params.contains("passive")) {
      raise(ErrorKind::config, "apl loss needs params.active and params.passive");
    }
    return LossSpec::apl(alpha, loss_from_json(params.at("active")), beta,
                         loss_from_json(params.at("passive")));
  }
  raise(ErrorKind::config, "unknown loss kind '" + raw + "'");
}

}  // namespace

LossSpec shorthand_defaults() {
  LossSpec d;
  d.a = kShorthandMagnitude;
  return d;
}

nlohmann::json to_json(const LossSpec& spec) {
  json params = json::object();
  std::string kind;
  switch (spec.kind) {
    case LossKind::ce: kind = "ce"; break;
    case LossKind::focal:
      kind = "fl";
      params["gamma"] = spec.gamma;
      break;
    case LossKind::mae: kind = "mae"; break;
    case LossKind::mse: kind = "mse"; break;
    case LossKind::rce:
      kind = "rce";
      params["A"] = spec.A;
      break;
    case LossKind::amse:
      kind = "amse";
      params["a"] = spec.a;
      params["q"] = spec.q;
      break;
    case LossKind::normalized:
      kind = "normalized";
      params["base"] = to_json(spec.base());
      break;
    case LossKind::apl:
      kind = "apl";
      params["alpha"] = spec.alpha;
      params["beta"] = spec.beta;
      params["active"] = to_json(spec.active());
      params["passive"] = to_json(spec.passive());
      break;
  }
  return json{{"kind", kind}, {"params", params}};
}

LossSpec loss_from_json(const nlohmann::json& j) {
  if (j.is_string()) return from_name(j.get<std::string>(), json::object(), shorthand_defaults());
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    raise(ErrorKind::config, "loss must be an object with a string 'kind'");
  }
  const json params = j.value("params", json::object());
  if (!params.is_object()) raise(ErrorKind::config, "loss 'params' must be an object");
  return from_name(j.at("kind").get<std::string>(), params, shorthand_defaults());
}

LossSpec parse_loss_arg(const std::string& text, const LossSpec& defaults) {
  const auto first = text.find_first_not_of(" \t\n");
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      raise(ErrorKind::config, std::string("loss JSON does not parse: ") + e.what());
    }
    return loss_from_json(j);
  }
  return from_name(text, json::object(), defaults);
}

}  // namespace asymloss
