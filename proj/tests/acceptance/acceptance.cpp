#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>

#include "hitspde/check_suite.hpp"

// usage: hitspde_acceptance [output_dir] [criterion ...]
int main(int argc, char** argv) {
  hitspde::SuiteOptions options;
  options.output_dir = argc > 1 ? argv[1] : "acceptance";
  for (int i = 2; i < argc; ++i) options.only.push_back(std::atoi(argv[i]));
  try {
    const auto results = hitspde::run_check_suite(options, &std::cout);
    const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.pass(); });
    std::cout << passed << "/" << results.size() << " criteria pass\n";
    return passed == static_cast<long>(results.size()) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
