// Copyright 2026 The Screentime Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCREENTIME_SUBPROCESS_HPP_
#define SCREENTIME_SUBPROCESS_HPP_

#include <sys/types.h>

#include <string>

namespace screentime {

/// A child running `/bin/sh -c command` with all three standard streams
/// connected to pipes. The destructor closes the pipes and reaps the child.
class Subprocess {
 public:
  explicit Subprocess(const std::string& command);
  ~Subprocess();

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  int stdin_fd() const { return in_; }
  int stdout_fd() const { return out_; }
  int stderr_fd() const { return err_; }

  void close_stdin();
  void terminate();

  /// Waits for exit. Returns the exit status, or 128 + signal number.
  int wait();

 private:
  pid_t pid_ = -1;
  int in_ = -1;
  int out_ = -1;
  int err_ = -1;
  bool reaped_ = false;
  int status_ = 0;
};

/// Runs a shell command to completion, discarding its output.
/// Returns the exit status as for Subprocess::wait.
int run_shell(const std::string& command);

/// Ignores SIGPIPE so a dead child surfaces as EPIPE on write.
void ignore_sigpipe();

}  // namespace screentime

#endif  // SCREENTIME_SUBPROCESS_HPP_
