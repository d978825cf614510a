#include "core/base.hpp"

#include <cmath>
#include <string>

#include "core/errors.hpp"

namespace antilimit {

BasePoint BasePoint::from(const std::vector<double>& values) {
  if (values.empty() || values.size() > static_cast<std::size_t>(kMaxBaseDim)) {
    throw ConfigError("base point must have between 1 and " + std::to_string(kMaxBaseDim) +
                      " coordinates");
  }
  BasePoint p;
  p.dim = static_cast<int>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) p.coords[i] = values[i];
  return p;
}

std::vector<double> BasePoint::to_vector() const {
  return {coords.begin(), coords.begin() + dim};
}

bool operator==(const BasePoint& a, const BasePoint& b) {
  if (a.dim != b.dim) return false;
  for (int i = 0; i < a.dim; ++i)
    if (a[i] != b[i]) return false;
  return true;
}

double wrap_unit(double x) {
  double r = x - std::floor(x);
  // x slightly below an integer can round up to exactly 1.
  return r >= 1.0 ? 0.0 : r;
}

double torus_distance(const BasePoint& a, const BasePoint& b) {
  double d = 0.0;
  for (int i = 0; i < a.dim; ++i) {
    double t = std::fabs(wrap_unit(a[i] - b[i]));
    d = std::max(d, std::min(t, 1.0 - t));
  }
  return d;
}

BaseDynamics BaseDynamics::rotation(std::vector<double> omega) {
  if (omega.empty() || omega.size() > static_cast<std::size_t>(kMaxBaseDim))
    throw ConfigError("rotation vector must have between 1 and 4 components");
  BaseDynamics b;
  b.kind_ = Kind::Rotation;
  b.omega_ = std::move(omega);
  return b;
}

BaseDynamics BaseDynamics::fixed_point(BasePoint point) {
  BaseDynamics b;
  b.kind_ = Kind::FixedPoint;
  b.fixed_ = point;
  return b;
}

BaseDynamics BaseDynamics::explicit_sequence(std::vector<BasePoint> values, long k_min) {
  if (values.empty()) throw ConfigError("explicit theta sequence is empty");
  BaseDynamics b;
  b.kind_ = Kind::ExplicitSequence;
  b.sequence_ = std::move(values);
  b.k_min_ = k_min;
  return b;
}

int BaseDynamics::dim() const {
  switch (kind_) {
    case Kind::Rotation: return static_cast<int>(omega_.size());
    case Kind::FixedPoint: return fixed_.dim;
    case Kind::ExplicitSequence: return sequence_.front().dim;
  }
  return 1;
}

namespace {

// frac(theta0 + k*omega) using the exact rounding error of k*omega, so the
// result stays accurate to a few ulp even for |k| ~ 1e6.
double rotate(double theta0, long k, double omega) {
  const double kd = static_cast<double>(k);
  const double p = kd * omega;
  const double err = std::fma(kd, omega, -p);
  const double frac_p = p - std::floor(p);
  return wrap_unit(wrap_unit(theta0) + frac_p + err);
}

}  // namespace

BasePoint BaseDynamics::at(long k, const BasePoint& theta0) const {
  switch (kind_) {
    case Kind::Rotation: {
      BasePoint p;
      p.dim = dim();
      for (int i = 0; i < p.dim; ++i) p[i] = rotate(theta0[i], k, omega_[static_cast<std::size_t>(i)]);
      return p;
    }
    case Kind::FixedPoint:
      return fixed_;
    case Kind::ExplicitSequence: {
      if (k < window_min() || k > window_max()) {
        throw ContractError("theta_k requested outside the stored explicit sequence",
                            {{"k", k}, {"window", {window_min(), window_max()}}});
      }
      return sequence_[static_cast<std::size_t>(k - k_min_)];
    }
  }
  return fixed_;
}

BasePoint BaseDynamics::step(const BasePoint& theta) const {
  switch (kind_) {
    case Kind::Rotation: {
      BasePoint p = theta;
      for (int i = 0; i < p.dim; ++i) p[i] = wrap_unit(theta[i] + omega_[static_cast<std::size_t>(i)]);
      return p;
    }
    case Kind::FixedPoint:
      return fixed_;
    case Kind::ExplicitSequence:
      throw ContractError("explicit sequences have no map h; index them with at()");
  }
  return theta;
}

std::vector<long> BaseDynamics::continued_fraction(int terms) const {
  std::vector<long> digits;
  if (kind_ != Kind::Rotation || omega_.size() != 1) return digits;
  double x = omega_[0];
  for (int i = 0; i < terms; ++i) {
    double a = std::floor(x);
    digits.push_back(static_cast<long>(a));
    double r = x - a;
    if (r < 1e-12) break;
    x = 1.0 / r;
  }
  return digits;
}

nlohmann::json BaseDynamics::to_json() const {
  nlohmann::json j;
  switch (kind_) {
    case Kind::Rotation:
      j["kind"] = "rotation";
      j["omega"] = omega_;
      break;
    case Kind::FixedPoint:
      j["kind"] = "fixed-point";
      j["theta"] = fixed_.to_vector();
      break;
    case Kind::ExplicitSequence: {
      j["kind"] = "explicit-sequence";
      j["k_min"] = k_min_;
      nlohmann::json vals = nlohmann::json::array();
      for (const auto& p : sequence_) vals.push_back(p.to_vector());
      j["values"] = vals;
      break;
    }
  }
  return j;
}

namespace {

std::vector<double> as_vector(const nlohmann::json& j, const std::string& key) {
  if (j.is_number()) return {j.get<double>()};
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& e : j) {
      if (!e.is_number()) throw ConfigError("expected numbers in '" + key + "'", {{"key", key}});
      out.push_back(e.get<double>());
    }
    return out;
  }
  throw ConfigError("expected a number or array for '" + key + "'", {{"key", key}});
}

}  // namespace

BaseDynamics base_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("base block needs a 'kind'", {{"key", "model.base.kind"}});
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "rotation") {
    if (!j.contains("omega")) throw ConfigError("rotation base needs 'omega'", {{"key", "model.base.omega"}});
    return BaseDynamics::rotation(as_vector(j.at("omega"), "model.base.omega"));
  }
  if (kind == "fixed-point") {
    std::vector<double> t = j.contains("theta") ? as_vector(j.at("theta"), "model.base.theta")
                                                : std::vector<double>{0.0};
    return BaseDynamics::fixed_point(BasePoint::from(t));
  }
  if (kind == "explicit-sequence") {
    if (!j.contains("values"))
      throw ConfigError("explicit-sequence base needs 'values'", {{"key", "model.base.values"}});
    std::vector<BasePoint> pts;
    for (const auto& v : j.at("values")) pts.push_back(BasePoint::from(as_vector(v, "model.base.values")));
    long k_min = j.value("k_min", 0L);
    return BaseDynamics::explicit_sequence(std::move(pts), k_min);
  }
  throw ConfigError("unknown base kind '" + kind + "'", {{"key", "model.base.kind"}});
}

}  // namespace antilimit
