#include "freeflow/errors.hpp"

namespace freeflow::detail {

void throw_domain(const std::string& where, const std::string& what) {
  throw DomainError(where + ": " + what);
}

}  // namespace freeflow::detail
