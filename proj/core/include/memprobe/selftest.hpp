#pragma once

#include <string>
#include <vector>

namespace memprobe {

struct SelfTestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick invariant checks on synthetic data (no dataset files, a few seconds).
std::vector<SelfTestCheck> run_selftest();

}  // namespace memprobe
