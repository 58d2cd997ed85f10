#pragma once

#include <stdexcept>
#include <string>

namespace ksf {

// Error categories carried by every ksf exception. The C API and the CLI
// map these onto their numeric status / exit codes.
enum class errc {
  invalid_input,      // bad argument, shape mismatch, out-of-range symbol
  insufficient_data,  // series too short for the requested operation
  degenerate_data,    // constant series, zero bandwidth, zero-variance input
  rank_deficient,     // requested rank exceeds numerical rank
  non_ergodic,        // no unique stationary distribution
  impossible_evidence,// observation sequence has zero probability
  unstable,           // weight normalization collapsed / unstable operator
  fit_failure,        // optimizer or solver did not converge
  parse_error,        // malformed file content
  io_error,           // filesystem failure
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

// Normalization collapse or unstable observation operator. Callers that
// promise totality (the persistence switch) catch this and fall back.
class UnstableError : public Error {
 public:
  explicit UnstableError(const std::string& what) : Error(errc::unstable, what) {}
};

}  // namespace ksf
