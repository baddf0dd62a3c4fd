#pragma once

#include <stdexcept>
#include <string>

namespace rotorspin {

// Runtime failure tagged with the module that raised it. The CLI prints the
// module name so users can tell a config problem from a numerical one.
class Error : public std::runtime_error {
public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

private:
  std::string module_;
};

}  // namespace rotorspin
