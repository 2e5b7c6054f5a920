#pragma once

#include <stdexcept>
#include <string>

namespace atrfas {

// Shape/dimension disagreements between tensors or between a tensor and an op.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Bad op parameter (negative stride, even kernel, n0 < 3, ...).
class ParamError : public std::invalid_argument {
public:
    explicit ParamError(const std::string& what) : std::invalid_argument(what) {}
};

// Input value outside an op's domain (log of non-positive, label out of range).
class ValueError : public std::domain_error {
public:
    explicit ValueError(const std::string& what) : std::domain_error(what) {}
};

// NaN/Inf produced by a forward op, or detected in gradients.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Unusable run configuration (unknown key, missing section, bad value).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Missing/corrupt dataset or checkpoint, unwritable output path.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace atrfas
