#include "ttpdf/log.hpp"

#include <iostream>
#include <mutex>

namespace ttpdf {

namespace {
std::mutex mutex;
WarningHandler handler = [](const std::string& m) { std::cerr << "ttpdf warning: " << m << '\n'; };
}  // namespace

WarningHandler set_warning_handler(WarningHandler h) {
  std::lock_guard lock(mutex);
  std::swap(handler, h);
  return h;
}

void warn(const std::string& message) {
  std::lock_guard lock(mutex);
  if (handler) handler(message);
}

}  // namespace ttpdf
