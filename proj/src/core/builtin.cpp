#include "core/builtin.hpp"

#include <cmath>
#include <set>
#include <vector>

#include "core/conditions.hpp"
#include "core/errors.hpp"

namespace antilimit {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kGolden = 0.6180339887498949;  // (sqrt(5) - 1) / 2

using json = nlohmann::json;

double number_at(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError("'" + path + "' must be a number", {{"key", path}});
  return v.get<double>();
}

double optional_number(const json& obj, const std::string& key, double fallback,
                       const std::string& path) {
  return obj.contains(key) ? number_at(obj, key, path) : fallback;
}

void check_keys(const json& params, const std::set<std::string>& allowed,
                const std::set<std::string>& required, const std::string& model) {
  if (!params.is_object()) throw ConfigError("model.params must be an object", {{"key", "model.params"}});
  for (const auto& [k, v] : params.items()) {
    if (!allowed.count(k) && k != "epsilon")
      throw ConfigError("unknown parameter '" + k + "' for model " + model,
                        {{"key", "model.params." + k}});
  }
  std::vector<std::string> missing;
  for (const auto& k : required)
    if (!params.contains(k)) missing.push_back(k);
  if (!missing.empty()) {
    std::string list;
    for (const auto& k : missing) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("model " + model + " is missing parameters: " + list,
                      {{"key", "model.params"}, {"missing", missing}});
  }
}

CouplingField laplacian(Mode mode) {
  CouplingField z;
  if (mode == Mode::TwoD) {
    z.value = [](const BasePoint&, double a, double b, double c) { return (a - 2.0 * b + c) / 8.0; };
    z.grad = [](const BasePoint&, double, double, double) {
      return CouplingField::Grad{0.125, -0.25, 0.125};
    };
  } else {
    z.value = [](const BasePoint&, double a, double b, double) { return (a - 2.0 * b) / 8.0; };
    z.grad = [](const BasePoint&, double, double, double) {
      return CouplingField::Grad{0.125, -0.25, 0.0};
    };
  }
  return z;
}

// One user term: c * x^p * trig(2 pi (q . theta + phi)).
struct Term {
  double c = 0.0;
  std::array<int, 3> p{0, 0, 0};
  enum class Trig { None, Sin, Cos } trig = Trig::None;
  std::vector<double> q;
  double phi = 0.0;

  double angle_factor(const BasePoint& t) const {
    if (trig == Trig::None) return 1.0;
    double s = phi;
    for (std::size_t i = 0; i < q.size() && static_cast<int>(i) < t.dim; ++i)
      s += q[i] * t[static_cast<int>(i)];
    return trig == Trig::Sin ? std::sin(kTwoPi * s) : std::cos(kTwoPi * s);
  }
};

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

double dpow(double x, int p) { return p == 0 ? 0.0 : p * ipow(x, p - 1); }

std::vector<Term> parse_terms(const json& block, int vars, const std::string& path) {
  if (!block.is_object() || !block.contains("terms") || !block.at("terms").is_array())
    throw ConfigError("'" + path + "' needs a 'terms' array", {{"key", path + ".terms"}});
  std::vector<Term> out;
  std::size_t idx = 0;
  for (const json& tj : block.at("terms")) {
    const std::string tp = path + ".terms[" + std::to_string(idx++) + "]";
    if (!tj.is_object() || !tj.contains("c")) throw ConfigError("term needs 'c'", {{"key", tp + ".c"}});
    Term t;
    t.c = number_at(tj, "c", tp + ".c");
    if (tj.contains("p")) {
      const json& p = tj.at("p");
      if (vars == 1 && p.is_number_integer()) {
        t.p[0] = p.get<int>();
      } else if (p.is_array() && static_cast<int>(p.size()) == vars) {
        for (int i = 0; i < vars; ++i) t.p[static_cast<std::size_t>(i)] = p.at(static_cast<std::size_t>(i)).get<int>();
      } else {
        throw ConfigError("term power has the wrong shape", {{"key", tp + ".p"}});
      }
      for (int e : t.p)
        if (e < 0) throw ConfigError("term powers must be non-negative", {{"key", tp + ".p"}});
    }
    const std::string trig = tj.value("trig", std::string("none"));
    if (trig == "sin") t.trig = Term::Trig::Sin;
    else if (trig == "cos") t.trig = Term::Trig::Cos;
    else if (trig != "none") throw ConfigError("trig must be none, sin or cos", {{"key", tp + ".trig"}});
    if (tj.contains("q")) {
      const json& q = tj.at("q");
      if (q.is_number()) t.q = {q.get<double>()};
      else if (q.is_array()) t.q = q.get<std::vector<double>>();
      else throw ConfigError("q must be a number or array", {{"key", tp + ".q"}});
    }
    t.phi = optional_number(tj, "phi", 0.0, tp + ".phi");
    out.push_back(std::move(t));
  }
  return out;
}

PotentialField custom_potential(std::vector<Term> terms) {
  PotentialField v;
  v.value = [terms](const BasePoint& th, double x) {
    double s = 0.0;
    for (const Term& t : terms) s += t.c * ipow(x, t.p[0]) * t.angle_factor(th);
    return s;
  };
  v.dx = [terms](const BasePoint& th, double x) {
    double s = 0.0;
    for (const Term& t : terms) s += t.c * dpow(x, t.p[0]) * t.angle_factor(th);
    return s;
  };
  return v;
}

CouplingField custom_coupling(std::vector<Term> terms) {
  CouplingField z;
  z.value = [terms](const BasePoint& th, double a, double b, double c) {
    double s = 0.0;
    for (const Term& t : terms)
      s += t.c * ipow(a, t.p[0]) * ipow(b, t.p[1]) * ipow(c, t.p[2]) * t.angle_factor(th);
    return s;
  };
  z.grad = [terms](const BasePoint& th, double a, double b, double c) {
    CouplingField::Grad g{0, 0, 0};
    for (const Term& t : terms) {
      const double w = t.c * t.angle_factor(th);
      const double pa = ipow(a, t.p[0]), pb = ipow(b, t.p[1]), pc = ipow(c, t.p[2]);
      g[0] += w * dpow(a, t.p[0]) * pb * pc;
      g[1] += w * pa * dpow(b, t.p[1]) * pc;
      g[2] += w * pa * pb * dpow(c, t.p[2]);
    }
    return g;
  };
  return z;
}

CouplingField ignore_third(CouplingField z) {
  CouplingField out;
  out.value = [z](const BasePoint& t, double a, double b, double) { return z.value(t, a, b, 0.0); };
  if (z.grad) {
    out.grad = [z](const BasePoint& t, double a, double b, double) {
      auto g = z.grad(t, a, b, 0.0);
      g[2] = 0.0;
      return g;
    };
  }
  return out;
}

struct Defaults {
  BaseDynamics base;
  Rescale rescale;
};

}  // namespace

ModelInstance model_from_json(const json& block_in) {
  if (!block_in.is_object()) throw ConfigError("model block must be an object", {{"key", "model"}});
  json block = block_in;
  if (!block.contains("name") || !block.at("name").is_string())
    throw ConfigError("model block needs a string 'name'", {{"key", "model.name"}});
  const std::string name = block.at("name").get<std::string>();
  if (!block.contains("params")) block["params"] = json::object();
  const json& params = block.at("params");

  static const std::set<std::string> kBlockKeys = {"name", "params", "epsilon", "epsilon0",
                                                   "base", "rescale", "mode"};
  for (const auto& [k, v] : block.items())
    if (!kBlockKeys.count(k)) throw ConfigError("unknown model key '" + k + "'", {{"key", "model." + k}});

  Mode mode = Mode::TwoD;
  if (block.contains("mode")) {
    const std::string ms = block.at("mode").is_string() ? block.at("mode").get<std::string>() : "";
    if (ms == "1d") mode = Mode::OneD;
    else if (ms != "2d") throw ConfigError("mode must be '1d' or '2d'", {{"key", "model.mode"}});
  }

  double epsilon = 0.0;
  if (block.contains("epsilon")) epsilon = number_at(block, "epsilon", "model.epsilon");
  else if (params.is_object() && params.contains("epsilon"))
    epsilon = number_at(params, "epsilon", "model.params.epsilon");
  else
    throw ConfigError("model is missing parameters: epsilon",
                      {{"key", "model.epsilon"}, {"missing", {"epsilon"}}});
  block["epsilon"] = epsilon;

  PotentialField v;
  CouplingField z = laplacian(mode);
  Defaults d{BaseDynamics::rotation({kGolden}), Rescale{}};

  if (name == "linear") {
    check_keys(params, {"omega"}, {}, name);
    v.value = [](const BasePoint&, double x) { return x; };
    v.dx = [](const BasePoint&, double) { return 1.0; };
    d.base = BaseDynamics::rotation({optional_number(params, "omega", kGolden, "model.params.omega")});
  } else if (name == "double-well") {
    check_keys(params, {"theta"}, {}, name);
    v.value = [](const BasePoint&, double x) { return x * x - 0.25; };
    v.dx = [](const BasePoint&, double x) { return 2.0 * x; };
    d.base = BaseDynamics::fixed_point(
        BasePoint::scalar(optional_number(params, "theta", 0.0, "model.params.theta")));
  } else if (name == "standard-map") {
    check_keys(params, {"gamma", "kappa", "omega", "phase"}, {"gamma", "kappa"}, name);
    const double gamma = number_at(params, "gamma", "model.params.gamma");
    const double kappa = number_at(params, "kappa", "model.params.kappa");
    const double phase = optional_number(params, "phase", 0.0, "model.params.phase");
    // V = dW/dx for W = gamma x sin(2 pi theta) - kappa/(2 pi)^2 cos(2 pi (x - phase)).
    v.value = [=](const BasePoint& t, double x) {
      return gamma * std::sin(kTwoPi * t[0]) + kappa / kTwoPi * std::sin(kTwoPi * (x - phase));
    };
    v.dx = [=](const BasePoint&, double x) { return kappa * std::cos(kTwoPi * (x - phase)); };
    d.base = BaseDynamics::rotation({optional_number(params, "omega", kGolden, "model.params.omega")});
    // Unscaled, the zeros sin(2 pi x) = 0 sit on the walls of I.
    d.rescale = Rescale{0.75, 0.0};
  } else if (name == "vs-family") {
    check_keys(params, {"s", "omega"}, {"s"}, name);
    const double s = number_at(params, "s", "model.params.s");
    const double shift = 2.15 - 0.15 * s;
    auto coef_a = [](double th) { return 1.1 - 1.2 * std::sin(kTwoPi * (th + 0.2)); };
    auto coef_b = [](double th) {
      const double c = std::cos(0.5 * kTwoPi * th);
      return 1.2 + 1.2 * c * c;
    };
    v.value = [=](const BasePoint& t, double x) {
      return (x * x + coef_a(t[0])) * (x - coef_b(t[0])) + shift;
    };
    v.dx = [=](const BasePoint& t, double x) {
      const double a = coef_a(t[0]), b = coef_b(t[0]);
      return 2.0 * x * (x - b) + (x * x + a);
    };
    d.base = BaseDynamics::rotation({optional_number(params, "omega", kGolden, "model.params.omega")});
    d.rescale = Rescale{3.0, 0.0};
  } else if (name == "custom") {
    check_keys(params, {"V", "Z"}, {"V"}, name);
    v = custom_potential(parse_terms(params.at("V"), 1, "model.params.V"));
    if (params.contains("Z")) {
      z = custom_coupling(parse_terms(params.at("Z"), 3, "model.params.Z"));
      if (mode == Mode::OneD) z = ignore_third(z);
    }
  } else {
    throw ConfigError("unknown model name '" + name + "'",
                      {{"key", "model.name"},
                       {"known", {"linear", "double-well", "standard-map", "vs-family", "custom"}}});
  }

  BaseDynamics base = block.contains("base") ? base_from_json(block.at("base")) : d.base;
  Rescale rescale = d.rescale;
  if (block.contains("rescale")) {
    const json& r = block.at("rescale");
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
      throw ConfigError("rescale must be [alpha, beta]", {{"key", "model.rescale"}});
    rescale = Rescale{r[0].get<double>(), r[1].get<double>()};
  }

  ModelInstance m(name, block, mode, std::move(z), std::move(v), rescale, std::move(base), epsilon);
  if (block.contains("epsilon0")) return m.with_epsilon0(number_at(block, "epsilon0", "model.epsilon0"));
  try {
    return m.with_epsilon0(estimate_epsilon0(m, 0.01));
  } catch (const DegeneratePotential& e) {
    return m.with_epsilon0(0.0).with_warning(std::string("epsilon0 set to 0: ") + e.what());
  }
}

ModelInstance builtin_model(const std::string& name, const json& params) {
  return model_from_json({{"name", name}, {"params", params}});
}

ModelInstance with_param(const ModelInstance& m, const std::string& key, double value) {
  if (key == "epsilon") return m.with_epsilon(value);
  json spec = m.spec();
  if (key == "epsilon0") {
    spec["epsilon0"] = value;
  } else {
    spec["params"][key] = value;
  }
  ModelInstance out = model_from_json(spec);
  return m.shift() ? out.with_shift(m.shift()) : out;
}

double get_param(const ModelInstance& m, const std::string& key) {
  if (key == "epsilon") return m.epsilon();
  if (key == "epsilon0") return m.epsilon0();
  const json& p = m.spec().at("params");
  if (!p.contains(key) || !p.at(key).is_number())
    throw ConfigError("model has no scalar parameter '" + key + "'", {{"key", "model.params." + key}});
  return p.at(key).get<double>();
}

}  // namespace antilimit
