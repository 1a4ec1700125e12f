// One line per acceptance criterion; exit status 1 if any fails.
#include <cstdlib>
#include <iostream>
#include <string>

#include "rbsde/verify.hpp"

int main(int argc, char** argv) {
  rbsde::verify::SuiteOptions options;
  if (argc > 1) options.seed = std::stoull(argv[1]);
  const auto results = rbsde::verify::run_suite(options, &std::cout);
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << (failed == 0 ? "ALL CRITERIA PASS" : std::to_string(failed) + " CRITERIA FAILED") << std::endl;
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
