#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xdiff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration parse or validation failure. `path` is the dotted key path
/// (or file path) that caused it.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class SolverErrorKind { NegativeDensity, NonFinite, SolverDiverged };

inline const char* to_string(SolverErrorKind k) {
  switch (k) {
    case SolverErrorKind::NegativeDensity: return "NegativeDensity";
    case SolverErrorKind::NonFinite: return "NonFinite";
    case SolverErrorKind::SolverDiverged: return "SolverDiverged";
  }
  return "Unknown";
}

/// Raised by the time steppers. Carries the time at which the failing step
/// started and, where meaningful, the offending cell index.
class SolverError : public Error {
 public:
  static constexpr std::size_t no_cell = static_cast<std::size_t>(-1);

  SolverError(SolverErrorKind kind, double t, std::size_t cell, const std::string& detail)
      : Error(std::string(to_string(kind)) + " at t=" + std::to_string(t) +
              (cell == no_cell ? std::string() : " cell=" + std::to_string(cell)) +
              (detail.empty() ? std::string() : ": " + detail)),
        kind_(kind), t_(t), cell_(cell) {}

  SolverErrorKind kind() const noexcept { return kind_; }
  double time() const noexcept { return t_; }
  std::size_t cell() const noexcept { return cell_; }

 private:
  SolverErrorKind kind_;
  double t_;
  std::size_t cell_;
};

/// Errors of the analysis routines (relative entropy, thresholds, rate fits).
class AnalysisError : public Error {
 public:
  enum class Kind { NonpositiveSteadyState, ZeroMean, WindowTooShort, SignalBelowNoise };

  AnalysisError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace xdiff
