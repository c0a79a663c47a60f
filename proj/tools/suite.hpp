#pragma once

#include <string>
#include <vector>

namespace brakeorbit::suite {

struct Check {
  int criterion = 0;  // 0 for supporting invariants
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // how value is compared with threshold, e.g. "<=" or "=="
  bool pass = false;
  std::string detail;
};

struct SuiteOptions {
  int threads = 1;
  unsigned long long seed = 0;
  int cells = 160;
  int gradient_points = 20;
};

constexpr int kCriteria = 10;  // numbered checks the suite itself can evaluate

std::vector<Check> run_criterion(int criterion, const SuiteOptions& opts);
std::vector<Check> run_invariants(const SuiteOptions& opts);
std::vector<Check> run_all(const SuiteOptions& opts);

std::string criterion_title(int criterion);

}  // namespace brakeorbit::suite
