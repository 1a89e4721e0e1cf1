#include "cppf/log.hpp"

#include <iostream>
#include <mutex>

namespace cppf {

namespace {

std::mutex& sink_mutex() {
  static std::mutex mu;
  return mu;
}

LogSink& sink() {
  static LogSink s = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  return s;
}

}  // namespace

LogSink set_warning_sink(LogSink s) {
  std::lock_guard lock(sink_mutex());
  auto prev = std::move(sink());
  sink() = std::move(s);
  return prev;
}

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

}  // namespace cppf
