#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cdspec {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double value = 0.0;      // worst measured quantity
  double threshold = 0.0;  // bound it must satisfy
  double seconds = 0.0;
  std::string detail;
};

// Runs the acceptance suite, printing one pass/fail line per criterion to
// `log`. `only` restricts to a single criterion (1-10); 0 runs everything.
std::vector<CriterionResult> run_acceptance(std::ostream& log, int only = 0);

}  // namespace cdspec
