#include "core/model.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace antilimit {

long SiteShift::at(long k) const {
  if (!covers(k)) {
    throw ContractError("site shift requested outside its window",
                        {{"k", k}, {"window", {k_min, k_min + static_cast<long>(m.size()) - 1}}});
  }
  return m[static_cast<std::size_t>(k - k_min)];
}

ModelInstance::ModelInstance(std::string name, nlohmann::json spec, Mode mode, CouplingField z,
                             PotentialField v_physical, Rescale rescale, BaseDynamics base,
                             double epsilon)
    : name_(std::move(name)),
      spec_(std::move(spec)),
      mode_(mode),
      z_(std::move(z)),
      v_phys_(std::move(v_physical)),
      rescale_(rescale),
      base_(std::move(base)),
      epsilon_(epsilon) {
  if (!(rescale_.alpha != 0.0 && std::isfinite(rescale_.alpha) && std::isfinite(rescale_.beta)))
    throw ConfigError("rescale alpha must be finite and nonzero", {{"key", "model.rescale"}});
  if (!std::isfinite(epsilon_)) throw ConfigError("epsilon must be finite", {{"key", "model.epsilon"}});
  v_ = rescaled(v_phys_, rescale_);
}

ModelInstance ModelInstance::with_epsilon(double eps) const {
  ModelInstance m = *this;
  m.epsilon_ = eps;
  m.spec_["epsilon"] = eps;
  return m;
}

ModelInstance ModelInstance::with_epsilon0(double eps0) const {
  ModelInstance m = *this;
  m.epsilon0_ = eps0;
  return m;
}

ModelInstance ModelInstance::with_shift(std::shared_ptr<const SiteShift> s) const {
  ModelInstance m = *this;
  m.shift_ = std::move(s);
  return m;
}

ModelInstance ModelInstance::with_warning(std::string w) const {
  ModelInstance m = *this;
  m.warnings_.push_back(std::move(w));
  return m;
}

double ModelInstance::eval_f(const BasePoint& t, const std::vector<double>& args) const {
  if (static_cast<int>(args.size()) != arity()) {
    throw ContractError("eval_f arity mismatch",
                        {{"expected", arity()}, {"got", args.size()}});
  }
  return f(t, args[0], args[1], mode_ == Mode::TwoD ? args[2] : 0.0);
}

double ModelInstance::site_f(long k, const BasePoint& t, double a, double b, double c) const {
  if (!shift_) return f(t, a, b, c);
  const double ma = static_cast<double>(shift_->at(k + 1));
  const double mb = static_cast<double>(shift_->at(k));
  const double mc = static_cast<double>(shift_->at(k - 1));
  return epsilon_ * z_.value(t, a + ma, b + mb, c + mc) + v_.value(t, b);
}

CouplingField::Grad ModelInstance::site_grad(long k, const BasePoint& t, double a, double b,
                                             double c) const {
  double ma = 0, mb = 0, mc = 0;
  if (shift_) {
    ma = static_cast<double>(shift_->at(k + 1));
    mb = static_cast<double>(shift_->at(k));
    mc = static_cast<double>(shift_->at(k - 1));
  }
  CouplingField::Grad g = z_.gradient(t, a + ma, b + mb, c + mc);
  g[0] *= epsilon_;
  g[1] = epsilon_ * g[1] + v_.derivative(t, b);
  g[2] = mode_ == Mode::TwoD ? epsilon_ * g[2] : 0.0;
  return g;
}

void ModelInstance::require_small_epsilon(const char* op) const {
  if (!(std::fabs(epsilon_) < epsilon0_)) {
    throw ContractError(std::string(op) + " requires |epsilon| < epsilon0",
                        {{"epsilon", epsilon_}, {"epsilon0", epsilon0_}});
  }
}

nlohmann::json ModelInstance::summary() const {
  return {{"name", name_},
          {"mode", mode_ == Mode::OneD ? "1d" : "2d"},
          {"epsilon", epsilon_},
          {"epsilon0", epsilon0_},
          {"rescale", {rescale_.alpha, rescale_.beta}},
          {"base", base_.to_json()},
          {"shifted", static_cast<bool>(shift_)}};
}

}  // namespace antilimit
