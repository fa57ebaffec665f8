#pragma once

#include <stdexcept>
#include <string>

namespace xbarsim {

// Caller violated an operation's contract (bad lengths, empty inputs, ...).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of the operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A calibration step had no signal to fit against.
class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Mapping/calibration failure while patching; carries the offending layer.
class PatchError : public std::runtime_error {
public:
    PatchError(std::size_t layer, const std::string& what)
        : std::runtime_error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}

    std::size_t layer() const noexcept { return layer_; }

private:
    std::size_t layer_;
};

}  // namespace xbarsim
