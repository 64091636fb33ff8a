#pragma once

#include "slq/model.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace slq {

/// A ProblemSpec plus the per-instance verification settings stored with it.
struct Instance {
    std::string name;
    ProblemSpec spec;
    Vector x0;            // default initial state
    double c_bias = 0.0;  // discretization-bias allowance coefficient (cost units per unit dt)
};

/// Parses the JSON instance schema documented in docs/config.md.
/// Throws ConfigError on malformed input.
Instance parse_instance(std::string_view json_text);
Instance load_instance(const std::filesystem::path& path);

}  // namespace slq
