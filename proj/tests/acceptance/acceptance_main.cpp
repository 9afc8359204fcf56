// Acceptance suite runner: one pass/fail line per criterion; nonzero exit on
// any failure. An optional argument restricts the run to a single criterion.
#include <cstdlib>
#include <iostream>

#include "cdspec/acceptance.hpp"

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  auto results = cdspec::run_acceptance(std::cout, only);
  int failures = 0;
  for (const auto& r : results)
    if (!r.pass) ++failures;
  std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: " + std::to_string(failures))
            << " (" << results.size() << " run)\n";
  return failures == 0 ? 0 : 1;
}
