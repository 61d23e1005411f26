#pragma once

#include <stdexcept>
#include <string>

namespace ldpkit {

// Domain error carrying a stable machine-readable token (e.g.
// "not-absolutely-continuous", "infeasible-constraints"). The CLI maps these
// to exit code 2 and echoes the token.
class LdpError : public std::runtime_error {
 public:
  LdpError(std::string token, const std::string& message)
      : std::runtime_error(token + ": " + message), token_(std::move(token)) {}

  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

}  // namespace ldpkit
