// SPDX-FileCopyrightText: 2026 The lpcm authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace lpcm {

/// Bad values fed to a library operation (non-finite coordinates, empty
/// clouds, out-of-range parameters).
class InvalidInputError : public std::runtime_error {
public:
    explicit InvalidInputError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed external file (unknown magic, bad PLY header, odd-sized .bin).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Inconsistent configuration (missing weight file, shape mismatch).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Damaged or truncated bitstream / weight file.
class CorruptionError : public std::runtime_error {
public:
    explicit CorruptionError(const std::string& what) : std::runtime_error(what) {}
};

/// Predictor produced a non-finite value; coding cannot continue.
class PredictorError : public std::runtime_error {
public:
    explicit PredictorError(const std::string& what) : std::runtime_error(what) {}
};

/// Training diverged (non-finite loss).
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lpcm
