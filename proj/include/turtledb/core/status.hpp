#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace turtledb {

enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument,
  kInvalidParameter,
  kContractViolation,
  kEmptyBatch,
  kIOFailure,
  kOutOfSpace,
  kUseAfterFree,
  kRecordTooLarge,
  kRecoveryHalt,
  kOpenFailure,
  kNotFound,
};

const char* error_code_name(ErrorCode code);

class Status
{
 public:
  Status() = default;

  static Status OK() { return Status{}; }

  static Status invalid_argument(std::string msg) { return Status{ErrorCode::kInvalidArgument, std::move(msg)}; }
  static Status invalid_parameter(std::string msg) { return Status{ErrorCode::kInvalidParameter, std::move(msg)}; }
  static Status contract_violation(std::string msg) { return Status{ErrorCode::kContractViolation, std::move(msg)}; }
  static Status empty_batch(std::string msg) { return Status{ErrorCode::kEmptyBatch, std::move(msg)}; }
  static Status io_failure(std::string msg) { return Status{ErrorCode::kIOFailure, std::move(msg)}; }
  static Status out_of_space(std::string msg) { return Status{ErrorCode::kOutOfSpace, std::move(msg)}; }
  static Status use_after_free(std::string msg) { return Status{ErrorCode::kUseAfterFree, std::move(msg)}; }
  static Status record_too_large(std::string msg) { return Status{ErrorCode::kRecordTooLarge, std::move(msg)}; }
  static Status recovery_halt(std::string msg) { return Status{ErrorCode::kRecoveryHalt, std::move(msg)}; }
  static Status open_failure(std::string msg) { return Status{ErrorCode::kOpenFailure, std::move(msg)}; }
  static Status not_found(std::string msg) { return Status{ErrorCode::kNotFound, std::move(msg)}; }

  bool ok() const { return code_ == ErrorCode::kOk; }
  ErrorCode code() const { return code_; }
  const std::string& message() const { return message_; }

  std::string to_string() const
  {
    if (ok()) {
      return "OK";
    }
    std::string s = error_code_name(code_);
    if (!message_.empty()) {
      s += ": ";
      s += message_;
    }
    return s;
  }

 private:
  Status(ErrorCode code, std::string msg) : code_{code}, message_{std::move(msg)} {}

  ErrorCode code_ = ErrorCode::kOk;
  std::string message_;
};

template <typename T>
class StatusOr
{
 public:
  StatusOr(Status s) : repr_{std::move(s)} {}
  StatusOr(T value) : repr_{std::move(value)} {}

  bool ok() const { return std::holds_alternative<T>(repr_); }

  Status status() const
  {
    if (ok()) {
      return Status::OK();
    }
    return std::get<Status>(repr_);
  }

  T& value() & { return std::get<T>(repr_); }
  const T& value() const& { return std::get<T>(repr_); }
  T&& value() && { return std::get<T>(std::move(repr_)); }

  T& operator*() & { return value(); }
  const T& operator*() const& { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

 private:
  std::variant<Status, T> repr_;
};

// Propagate a non-ok Status from an expression.
#define TDB_TRY(expr)                       \
  do {                                      \
    ::turtledb::Status try_s__ = (expr);    \
    if (!try_s__.ok()) {                    \
      return try_s__;                       \
    }                                       \
  } while (0)

#define TDB_CONCAT_INNER_(a, b) a##b
#define TDB_CONCAT_(a, b) TDB_CONCAT_INNER_(a, b)

// Evaluate a StatusOr expression; on error return its Status, otherwise
// assign/initialize `lhs` with the value. One use per source line.
#define TDB_TRY_ASSIGN(lhs, ...)                              \
  auto TDB_CONCAT_(try_or_, __LINE__) = (__VA_ARGS__);        \
  if (!TDB_CONCAT_(try_or_, __LINE__).ok()) {                 \
    return TDB_CONCAT_(try_or_, __LINE__).status();           \
  }                                                           \
  lhs = std::move(TDB_CONCAT_(try_or_, __LINE__)).value()

}  // namespace turtledb
