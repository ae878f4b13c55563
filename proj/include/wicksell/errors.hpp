#pragma once

#include <stdexcept>
#include <string>

namespace wicksell {

/// Base of every library error. `id()` is a stable dotted identifier that the
/// CLI prints on stderr, e.g. "quadrature.no_convergence".
class Error : public std::runtime_error
{
public:
  Error(std::string id, const std::string& what)
    : std::runtime_error(what), id_(std::move(id))
  {}

  const std::string& id() const noexcept { return id_; }

private:
  std::string id_;
};

/// Invalid user-supplied configuration or arguments (CLI exit code 2).
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Numerical failure at run time (CLI exit code 3).
class NumericalError : public Error
{
public:
  using Error::Error;
};

inline void require(bool cond, const char* id, const std::string& what)
{
  if (!cond)
    throw ConfigError(id, what);
}

} // namespace wicksell
