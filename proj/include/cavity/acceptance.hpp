#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cavity/config.hpp"

namespace cavity {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Runs every acceptance criterion against `config` (normally the defaults),
/// writing scratch files under config.output_dir / "verify". Quick mode
/// doubles every tolerance. Progress goes to `log`.
std::vector<CriterionResult> run_acceptance(const RunConfig& config, std::ostream& log);

/// "PASS [id] name: detail" or "FAIL ...".
std::string format_result(const CriterionResult& result);

}  // namespace cavity
