// Acceptance gate: runs the full verification suite and prints one
// pass/fail line per criterion. Exits nonzero if any criterion fails.
#include <cstdio>

#include "kdvw/verify.hpp"

int main() {
  const auto results = kdvw::verify::run_all(kdvw::verify::Level::full);
  bool all_pass = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    std::printf("[%s] criterion %2zu %-26s measured %.6g limit %.6g | %s\n",
                r.pass ? "PASS" : "FAIL", i + 1, r.name.c_str(), r.measured, r.threshold,
                r.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && r.pass;
  }
  if (all_pass)
    std::printf("acceptance: all %zu criteria passed\n", results.size());
  else
    std::printf("acceptance: FAILURES above\n");
  return all_pass ? 0 : 1;
}
