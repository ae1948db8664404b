#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace moeda {

// Requested enumeration or tracking structure exceeds a configured cap.
class capacity_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A search exhausted its budget without meeting its success rule.
// Carries the last population size that was tried and failed.
class infeasible_error : public std::runtime_error {
public:
    infeasible_error(const std::string& what, std::uint64_t last_failing_n)
        : std::runtime_error(what), last_failing_n_(last_failing_n) {}

    std::uint64_t last_failing_n() const noexcept { return last_failing_n_; }

private:
    std::uint64_t last_failing_n_;
};

}  // namespace moeda
