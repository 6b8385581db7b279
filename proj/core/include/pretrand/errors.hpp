#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace pretrand {

// Data / runtime failure (bad file, shape mismatch, non-finite values, ...).
// The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flags / bad config keys. The CLI maps these to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pretrand

#define PR_CHECK(condition, message)            \
  do {                                          \
    if (!(condition)) {                         \
      std::ostringstream pr_oss_;               \
      pr_oss_ << message;                       \
      throw ::pretrand::Error(pr_oss_.str());   \
    }                                           \
  } while (0)

#define PR_USAGE_CHECK(condition, message)           \
  do {                                               \
    if (!(condition)) {                              \
      std::ostringstream pr_oss_;                    \
      pr_oss_ << message;                            \
      throw ::pretrand::UsageError(pr_oss_.str());   \
    }                                                \
  } while (0)
