#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/base.hpp"
#include "core/fields.hpp"

namespace antilimit {

enum class Mode { OneD, TwoD };

// Integer shift k -> m_k added to the coupling arguments site by site.
struct SiteShift {
  long k_min = 0;
  std::vector<long> m;  // m[i] = m_{k_min + i}

  long at(long k) const;
  bool covers(long k) const { return k >= k_min && k < k_min + static_cast<long>(m.size()); }
};

// One lattice system eps*Z + V = 0 on I = [-1, 1]. Immutable once built;
// the with_* helpers return modified copies.
class ModelInstance {
 public:
  ModelInstance() = default;

  // Assembled by builtin_model / model_from_json; V is the physical potential.
  ModelInstance(std::string name, nlohmann::json spec, Mode mode, CouplingField z,
                PotentialField v_physical, Rescale rescale, BaseDynamics base, double epsilon);

  const std::string& name() const { return name_; }
  // The model block this instance was built from (used to rebuild with a changed parameter).
  const nlohmann::json& spec() const { return spec_; }
  Mode mode() const { return mode_; }
  int arity() const { return mode_ == Mode::OneD ? 2 : 3; }
  const BaseDynamics& base() const { return base_; }
  const Rescale& rescale() const { return rescale_; }
  double epsilon() const { return epsilon_; }
  double epsilon0() const { return epsilon0_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const CouplingField& coupling() const { return z_; }
  const PotentialField& potential() const { return v_; }
  const PotentialField& physical_potential() const { return v_phys_; }
  const std::shared_ptr<const SiteShift>& shift() const { return shift_; }

  ModelInstance with_epsilon(double eps) const;
  ModelInstance with_epsilon0(double eps0) const;
  ModelInstance with_shift(std::shared_ptr<const SiteShift> s) const;
  ModelInstance with_warning(std::string w) const;

  double V(const BasePoint& t, double x) const { return v_.value(t, x); }
  double dV(const BasePoint& t, double x) const { return v_.derivative(t, x); }
  double Z(const BasePoint& t, double a, double b, double c) const { return z_.value(t, a, b, c); }
  CouplingField::Grad dZ(const BasePoint& t, double a, double b, double c) const {
    return z_.gradient(t, a, b, c);
  }

  // f_theta(a, b, c) = eps*Z(theta, a, b, c) + V(theta, b).
  double f(const BasePoint& t, double a, double b, double c) const {
    return epsilon_ * z_.value(t, a, b, c) + v_.value(t, b);
  }
  // Arity-checked entry point; args are (x_{k+1}, x_k[, x_{k-1}]).
  double eval_f(const BasePoint& t, const std::vector<double>& args) const;

  // Site k residual, honouring the optional per-site shift.
  double site_f(long k, const BasePoint& t, double a, double b, double c) const;
  // Gradient of site_f with respect to (a, b, c).
  CouplingField::Grad site_grad(long k, const BasePoint& t, double a, double b, double c) const;

  BasePoint theta(long k, const BasePoint& theta0) const { return base_.at(k, theta0); }

  // Throws ContractError unless |eps| < eps0.
  void require_small_epsilon(const char* op) const;

  nlohmann::json summary() const;

 private:
  std::string name_;
  nlohmann::json spec_;
  Mode mode_ = Mode::TwoD;
  CouplingField z_;
  PotentialField v_phys_;
  PotentialField v_;
  Rescale rescale_;
  BaseDynamics base_;
  double epsilon_ = 0.0;
  double epsilon0_ = 0.0;
  std::shared_ptr<const SiteShift> shift_;
  std::vector<std::string> warnings_;
};

}  // namespace antilimit
