#ifndef SEPNET_ERRORS_HPP
#define SEPNET_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace sepnet {

// Base for all domain errors raised by the library.
class FactorError : public std::runtime_error {
  public:
    explicit FactorError(const std::string& what) : std::runtime_error(what) {}
};

// Raised by normalize() and by conditioning on evidence of probability zero.
class ZeroMassError : public FactorError {
  public:
    explicit ZeroMassError(const std::string& what) : FactorError(what) {}
};

// Raised when a problem exceeds a configured size cap (oracle parent-space
// cap, exact-joint state-space cap).
class CapExceededError : public FactorError {
  public:
    explicit CapExceededError(const std::string& what) : FactorError(what) {}
};

// Raised when a constructed mixture component has an entry below -eps_sep.
class ComponentNotDistributionError : public FactorError {
  public:
    explicit ComponentNotDistributionError(const std::string& what) : FactorError(what) {}
};

// Raised by strict filtering when an observed variable is missing from some
// family subsets; carries the offending variable and the subsets missing it.
class SufficiencyBrokenError : public FactorError {
  public:
    SufficiencyBrokenError(const std::string& what, std::string variable,
                           std::vector<std::string> missing_subsets)
        : FactorError(what), variable(std::move(variable)),
          missing_subsets(std::move(missing_subsets)) {}

    std::string variable;
    std::vector<std::string> missing_subsets;
};

} // namespace sepnet

#endif
