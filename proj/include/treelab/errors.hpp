#pragma once

#include <stdexcept>
#include <string>

namespace treelab {

// Error taxonomy shared by the library and the CLI exit-code mapping:
// ConfigError -> 2, InvariantError -> 3, CapacityError -> 4.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class InvariantError : public std::runtime_error {
public:
    explicit InvariantError(const std::string& what) : std::runtime_error(what) {}
};

class CapacityError : public std::runtime_error {
public:
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace treelab
