#include "mrlft/version.hpp"

namespace mrlft {

const char* version_string() { return "0.1.0"; }

}  // namespace mrlft
