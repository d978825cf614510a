#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace antilimit {

enum class ErrorKind {
  Config,
  Contract,
  Hypothesis,
  Resolution,
  BoundaryEscape,
  NoConvergence,
  DegeneratePotential,
  Internal,
};

const char* to_string(ErrorKind kind);

// Base of every error the toolkit throws. `details` carries machine-readable
// diagnostics that the CLI forwards as JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, nlohmann::json details = {})
      : std::runtime_error(what), kind_(kind), details_(std::move(details)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const nlohmann::json& details() const noexcept { return details_; }
  nlohmann::json to_json() const;

 private:
  ErrorKind kind_;
  nlohmann::json details_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what, nlohmann::json details = {})
      : Error(ErrorKind::Config, what, std::move(details)) {}
};

struct ContractError : Error {
  explicit ContractError(const std::string& what, nlohmann::json details = {})
      : Error(ErrorKind::Contract, what, std::move(details)) {}
};

struct HypothesisError : Error {
  explicit HypothesisError(const std::string& what, nlohmann::json details = {})
      : Error(ErrorKind::Hypothesis, what, std::move(details)) {}
};

struct ResolutionError : Error {
  explicit ResolutionError(const std::string& what, nlohmann::json details = {})
      : Error(ErrorKind::Resolution, what, std::move(details)) {}
};

struct BoundaryEscape : Error {
  explicit BoundaryEscape(const std::string& what, nlohmann::json details = {})
      : Error(ErrorKind::BoundaryEscape, what, std::move(details)) {}
};

struct DegeneratePotential : Error {
  explicit DegeneratePotential(const std::string& what, nlohmann::json details = {})
      : Error(ErrorKind::DegeneratePotential, what, std::move(details)) {}
};

// Newton stagnation; keeps the last iterate so continuation can report it.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, std::vector<double> last_iterate,
                nlohmann::json details = {})
      : Error(ErrorKind::NoConvergence, what, std::move(details)),
        last_iterate_(std::move(last_iterate)) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

}  // namespace antilimit
