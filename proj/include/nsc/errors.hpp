#ifndef NSC_ERRORS_HPP
#define NSC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nsc {

// Shape of an operand does not match the consumer's expectation.
class DimensionError : public std::runtime_error {
public:
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

// Conv geometry yields a non-positive output extent.
class GeometryError : public std::runtime_error {
public:
    explicit GeometryError(const std::string& what) : std::runtime_error(what) {}
};

// A backward pass was requested with a cache built from different weights.
class StaleCacheError : public std::runtime_error {
public:
    explicit StaleCacheError(const std::string& what) : std::runtime_error(what) {}
};

// Optimizer asked to step past its configured schedule length.
class ScheduleExhaustedError : public std::runtime_error {
public:
    explicit ScheduleExhaustedError(const std::string& what) : std::runtime_error(what) {}
};

// Matrix shape not divisible into the requested block grid.
class BlockShapeError : public std::runtime_error {
public:
    explicit BlockShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Mask set violates the required support nesting.
class NestingViolationError : public std::runtime_error {
public:
    explicit NestingViolationError(const std::string& what) : std::runtime_error(what) {}
};

// Training loss became non-finite or exploded.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Errors raised while decoding a binary stream.
class FormatError : public std::runtime_error {
public:
    enum class Kind { BadMagic, BadVersion, Truncated, Invariant };

    FormatError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Bad command-line usage or config file contents.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem-level failure (missing file, unwritable path).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nsc

#endif
