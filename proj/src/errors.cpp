#include "tdsmor/errors.hpp"

#include <iostream>
#include <mutex>

namespace tdsmor {

namespace {

std::mutex& handler_mutex() {
  static std::mutex mutex;
  return mutex;
}

WarningHandler& handler() {
  static WarningHandler current = [](const std::string& message) {
    std::cerr << "warning: " << message << '\n';
  };
  return current;
}

}  // namespace

void set_warning_handler(WarningHandler new_handler) {
  std::lock_guard lock(handler_mutex());
  handler() = std::move(new_handler);
}

void warn(const std::string& message) {
  std::lock_guard lock(handler_mutex());
  if (handler()) handler()(message);
}

}  // namespace tdsmor
