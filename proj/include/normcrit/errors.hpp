#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace normcrit {

enum class ErrorKind {
  contract,      // caller broke a precondition (mismatched grids, bad sizes)
  construction,  // invalid object parameters
  admissibility, // coupling inside the excluded band
  geometry,      // T > gamma1 or p outside the branch's range
  resolution,    // grid too coarse for the requested operation
  solver,        // bracket or factorization failure
  convergence,
  projection_undefined,
  infeasible,
  fit_not_applicable,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace normcrit
