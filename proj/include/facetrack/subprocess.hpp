#pragma once

#include <chrono>
#include <mutex>
#include <string>
#include <sys/types.h>

namespace facetrack {

/// A child process (run through /bin/sh -c) that answers one line on stdout
/// for every line written to its stdin. Requests are serialized.
class LineProcess {
 public:
  explicit LineProcess(const std::string& command,
                       std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
  ~LineProcess();

  LineProcess(const LineProcess&) = delete;
  LineProcess& operator=(const LineProcess&) = delete;

  /// Sends `line` (a newline is appended) and returns the reply without its
  /// trailing newline. Throws BackendFailure on a dead child or timeout.
  std::string request(const std::string& line) const;

  const std::string& command() const { return command_; }

 private:
  std::string read_line() const;

  std::string command_;
  std::chrono::milliseconds timeout_;
  int fd_ = -1;
  pid_t pid_ = -1;
  mutable std::string pending_;
  mutable std::mutex mutex_;
};

}  // namespace facetrack
