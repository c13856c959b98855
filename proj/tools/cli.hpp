#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace gml::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitInvalid = 2;

/// Default output root when neither --out nor this variable is given: ./gml-out.
inline constexpr const char* kOutputDirEnv = "GML_OUTPUT_DIR";

/// Config schema of every subcommand: {subcommand: {key: {type, default, help}}}.
nlohmann::json config_schema();

/// Runs one subcommand. Diagnostics go to `err`, results to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gml::cli
