#pragma once

#include <string>
#include <vector>

namespace capgen {

struct SuiteResult {
  std::string name;  // gradcheck | causality | bleu
  bool passed = false;
  std::string detail;
};

// Runs the built-in verification suites on small fixed fixtures.
std::vector<SuiteResult> run_selftest();

SuiteResult selftest_gradcheck();
SuiteResult selftest_causality();
SuiteResult selftest_bleu();

}  // namespace capgen
