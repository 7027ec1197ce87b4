#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace byzcount {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int io = 2;
inline constexpr int config = 3;
inline constexpr int internal = 4;
}  // namespace exit_code

// Raised when a finished run breaks a bookkeeping identity.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// args excludes the program name. Default output directory comes from
// BYZCOUNT_OUT_DIR, else ".".
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace byzcount
