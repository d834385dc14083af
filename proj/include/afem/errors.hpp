#pragma once

#include <stdexcept>
#include <string>

namespace afem {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NonConformingMesh : public Error {
public:
  using Error::Error;
};

class DegenerateTriangle : public Error {
public:
  using Error::Error;
};

class InconsistentBoundary : public Error {
public:
  using Error::Error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
public:
  using Error::Error;
};

/// Two meshes that do not descend from the same initial mesh, or a
/// "finer" mesh that does not refine the coarse one.
class GenealogyMismatch : public Error {
public:
  using Error::Error;
};

class MeshMismatch : public Error {
public:
  using Error::Error;
};

class MeshFormatError : public Error {
public:
  using Error::Error;
};

class UnknownProblem : public Error {
public:
  using Error::Error;
};

class QuadratureError : public Error {
public:
  using Error::Error;
};

/// Raised when a linear or nonlinear solve misses its residual target.
class SolverError : public Error {
public:
  SolverError(const std::string& what, double achieved_residual)
      : Error(what), residual_(achieved_residual) {}
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

/// All refinement indicators vanish; the adaptive loop has nothing to mark.
class EstimatorConverged : public Error {
public:
  EstimatorConverged() : Error("converged: all refinement indicators are zero") {}
};

class TraceError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  enum class Kind { unknown_key, out_of_range, unknown_problem, bad_value, io };

  ConfigError(Kind kind, std::string key, const std::string& what)
      : Error(what), kind_(kind), key_(std::move(key)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& key() const noexcept { return key_; }

private:
  Kind kind_;
  std::string key_;
};

}  // namespace afem
