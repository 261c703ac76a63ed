// Run configuration: a small hierarchical key-value text format (sections of
// key = value lines), mapped onto a fully validated RunSetup. Parse errors
// carry line numbers; validation failures list every violated invariant.
#pragma once

#include "phasedam/stepper.hpp"

#include <map>
#include <stdexcept>
#include <string>

namespace phasedam {

struct ConfigError : std::runtime_error {
    int line = 0;
    std::vector<std::string> violations;
    ConfigError(const std::string& what, int line_ = 0,
                std::vector<std::string> violations_ = {})
        : std::runtime_error(what), line(line_), violations(std::move(violations_)) {}
};

struct ModelConfig {
    RunSetup setup;
    std::string output_dir = "out";
    bool write_vtk = false;
    unsigned long seed = 0;
    double audit_tol_factor = 10.0;
    std::string source_text; // verbatim configuration, echoed into the manifest
};

ModelConfig parse_config(const std::string& path);
ModelConfig parse_config_text(const std::string& text, const std::string& origin = "<text>");

} // namespace phasedam
