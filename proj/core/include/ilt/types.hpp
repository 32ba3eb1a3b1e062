#ifndef ILT_TYPES_HPP
#define ILT_TYPES_HPP

#include <stdexcept>
#include <string>

namespace ilt {

/// Index of a stable subordinator, constrained to (0, 1).
struct StableIndex {
    double value;

    explicit StableIndex(double alpha) : value(alpha) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("StableIndex: alpha must lie in (0, 1), got " +
                                        std::to_string(alpha));
    }
};

/// Killing rate (mass) of a relativistic subordinator, m >= 0.
/// m = 0 degenerates to the plain stable case.
struct Mass {
    double value;

    explicit Mass(double m) : value(m) {
        if (!(m >= 0.0))
            throw std::invalid_argument("Mass: m must be >= 0, got " + std::to_string(m));
    }
};

/// Order of a modified Bessel function. Integer orders are legal inputs;
/// they are resolved internally by a limit policy rather than rejected.
struct BesselOrder {
    double value;

    explicit BesselOrder(double nu) : value(nu) {}
};

/// Thrown when a sampler or experiment would exceed its runtime budget
/// (maps to a distinct process exit status in the CLI).
struct BudgetError : std::runtime_error {
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ilt

#endif
