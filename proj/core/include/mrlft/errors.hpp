#pragma once

#include <stdexcept>
#include <string>

namespace mrlft {

// Bad model data: dimension mismatches, invalid block kinds, parse failures.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure: singular solves, non-convergence, unstable prerequisites.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Ill-posed LFT: (I - M11*Delta) singular within tolerance.
class IllPosedError : public NumericError {
public:
    explicit IllPosedError(const std::string& msg) : NumericError(msg) {}
};

// Search budget exhausted before reaching the requested gap.
class BudgetError : public std::runtime_error {
public:
    explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mrlft
