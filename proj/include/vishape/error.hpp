#ifndef VISHAPE_ERROR_HPP
#define VISHAPE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace vishape {

// Invalid user input: bad mesh data, malformed expressions, config errors.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// A solver failed to converge or left its validity regime.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace vishape

#endif
