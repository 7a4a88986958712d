#pragma once

#include <stdexcept>
#include <string>

namespace pricelab {

enum class Errc {
  invalid_argument,
  config,
  no_convergence,
  degenerate_bounds,
  not_implemented,
  io,
  shape_mismatch,
  insufficient_history,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace pricelab
