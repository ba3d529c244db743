#pragma once

#include "app/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mepo::app {

inline constexpr const char* kToolName = "mepognn";
inline constexpr const char* kToolVersion = "0.1.0";

inline const std::vector<std::string> kCommands{"generate-mobility", "normalize-od", "simulate", "synth",   "train",
                                                "forecast",          "evaluate",     "benchmark", "grad-check"};

/// Runs one command. Artifacts and manifest.json go to cfg.output_dir;
/// progress lines go to log. Throws mepo::Error on failure; a failing
/// grad-check still writes its report before throwing.
void run(const std::string& command, const RunConfig& cfg, std::ostream& log);

} // namespace mepo::app
