#pragma once

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <spdlog/spdlog.h>
#include <string>
#include <thread>

#include "rehab/rules.hpp"

namespace rehab::cli {

inline void add_log_level(CLI::App& app, std::string& level) {
  app.add_option("--log-level", level, "trace, debug, info, warn, error or off")->capture_default_str();
}

inline void apply_log_level(const std::string& level) {
  spdlog::set_level(spdlog::level::from_str(level));
  spdlog::set_pattern("%^[%l]%$ %v");
}

inline unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

inline rb::KPolicy parse_k(const std::string& s) {
  if (s == "per-component") return rb::KPolicy::per_component();
  return rb::KPolicy::fixed(std::stod(s));
}

}  // namespace rehab::cli
