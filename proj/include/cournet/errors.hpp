#pragma once

// Error types shared across the library. Validation collects every violation it
// finds before throwing; operational errors throw immediately.

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cournet {

enum class ViolationKind {
  DimensionMismatch,
  NonPSDCost,        // producer cost matrix has a negative eigenvalue
  NegativeGamma,     // linear cost coefficient below zero
  NonPositiveSlope,  // demand slope beta <= 0
  NonPositiveIntercept,  // demand intercept alpha <= 0
  NegativeCapacity,
  SelfLoop,
  BadAccessEntry,  // access matrix entry not 0/1
};

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::DimensionMismatch: return "DimensionMismatch";
    case ViolationKind::NonPSDCost: return "NonPSDCost";
    case ViolationKind::NegativeGamma: return "NegativeGamma";
    case ViolationKind::NonPositiveSlope: return "NonPositiveSlope";
    case ViolationKind::NonPositiveIntercept: return "NonPositiveIntercept";
    case ViolationKind::NegativeCapacity: return "NegativeCapacity";
    case ViolationKind::SelfLoop: return "SelfLoop";
    case ViolationKind::BadAccessEntry: return "BadAccessEntry";
  }
  return "Unknown";
}

// One validation finding. Index fields are -1 when not applicable; `value`
// carries the offending number (min eigenvalue, slope, capacity, ...).
struct Violation {
  ViolationKind kind;
  int i = -1;  // producer index, or first index of a pair
  int j = -1;  // market index, or second index
  double value = 0.0;
  std::string detail;

  std::string message() const {
    std::string s = to_string(kind);
    if (i >= 0) s += " i=" + std::to_string(i);
    if (j >= 0) s += " j=" + std::to_string(j);
    if (!detail.empty()) s += " (" + detail + ")";
    return s;
  }
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : std::runtime_error(summarize(violations)), violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  static std::string summarize(const std::vector<Violation>& vs) {
    std::string s = "game validation failed with " + std::to_string(vs.size()) + " violation(s):";
    for (const auto& v : vs) s += "\n  " + v.message();
    return s;
  }
  std::vector<Violation> violations_;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  explicit DimensionMismatch(const std::string& what) : std::invalid_argument("dimension mismatch: " + what) {}
};

class NoAccess : public std::invalid_argument {
 public:
  NoAccess(int producer, int market)
      : std::invalid_argument("producer " + std::to_string(producer) + " has no access to market " +
                              std::to_string(market)),
        producer_(producer),
        market_(market) {}
  int producer() const { return producer_; }
  int market() const { return market_; }

 private:
  int producer_, market_;
};

class SupportViolation : public std::invalid_argument {
 public:
  explicit SupportViolation(const std::string& what) : std::invalid_argument("support violation: " + what) {}
};

class UnsupportedWelfare : public std::logic_error {
 public:
  explicit UnsupportedWelfare(const std::string& what) : std::logic_error("unsupported welfare: " + what) {}
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, long iterations)
      : std::runtime_error(what + " (after " + std::to_string(iterations) + " iterations)"),
        iterations_(iterations) {}
  long iterations() const { return iterations_; }

 private:
  long iterations_;
};

class TooLarge : public std::invalid_argument {
 public:
  explicit TooLarge(const std::string& what) : std::invalid_argument("problem too large: " + what) {}
};

// Best-response flow exists but net consumption went negative in a game whose
// equal demand intercepts guarantee it cannot; signals solver inconsistency.
class NonNegativityViolation : public std::runtime_error {
 public:
  explicit NonNegativityViolation(double min_z)
      : std::runtime_error("consumption negative (min z = " + std::to_string(min_z) +
                           ") despite equal-intercept guarantee"),
        min_z_(min_z) {}
  double min_z() const { return min_z_; }

 private:
  double min_z_;
};

// Structured file (game/outcome/audit) does not match its schema.
class FileFormatError : public std::runtime_error {
 public:
  explicit FileFormatError(const std::string& what) : std::runtime_error("file format error: " + what) {}
};

// Data ingestion errors.
class MissingColumn : public std::runtime_error {
 public:
  explicit MissingColumn(const std::string& name) : std::runtime_error("missing column: " + name), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class MalformedRow : public std::runtime_error {
 public:
  MalformedRow(long line, const std::string& reason)
      : std::runtime_error("malformed row at line " + std::to_string(line) + ": " + reason), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class InsufficientData : public std::runtime_error {
 public:
  explicit InsufficientData(const std::string& zone)
      : std::runtime_error("insufficient demand data in zone " + zone), zone_(zone) {}
  const std::string& zone() const { return zone_; }

 private:
  std::string zone_;
};

class NonDecreasingCurve : public std::runtime_error {
 public:
  explicit NonDecreasingCurve(const std::string& zone)
      : std::runtime_error("zonal demand curve in " + zone + " does not slope downward"), zone_(zone) {}
  const std::string& zone() const { return zone_; }

 private:
  std::string zone_;
};

class NoAwardedQuantity : public std::runtime_error {
 public:
  explicit NoAwardedQuantity(const std::string& unit)
      : std::runtime_error("unit " + unit + " has no offer with positive awarded quantity"), unit_(unit) {}
  const std::string& unit() const { return unit_; }

 private:
  std::string unit_;
};

class NonPositiveTheta : public std::runtime_error {
 public:
  explicit NonPositiveTheta(const std::string& unit)
      : std::runtime_error("unit " + unit + " awarded price does not exceed marginal cost floor"), unit_(unit) {}
  const std::string& unit() const { return unit_; }

 private:
  std::string unit_;
};

class UnknownZone : public std::runtime_error {
 public:
  explicit UnknownZone(const std::string& zone)
      : std::runtime_error("transit limit references unknown zone " + zone), zone_(zone) {}
  const std::string& zone() const { return zone_; }

 private:
  std::string zone_;
};

}  // namespace cournet
