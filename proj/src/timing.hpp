#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace tdsmor::detail {

class PhaseTimer {
 public:
  explicit PhaseTimer(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}

  void mark(std::string phase) {
    const auto now = std::chrono::steady_clock::now();
    sink_.emplace_back(std::move(phase), std::chrono::duration<double>(now - start_).count());
    start_ = now;
  }

 private:
  std::vector<std::pair<std::string, double>>& sink_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace tdsmor::detail
