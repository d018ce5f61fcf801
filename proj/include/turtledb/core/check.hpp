#pragma once

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

namespace turtledb::detail {

[[noreturn]] inline void check_failed(const char* file, int line, const std::string& what)
{
  std::fprintf(stderr, "CHECK failed at %s:%d: %s\n", file, line, what.c_str());
  std::fflush(stderr);
  std::abort();
}

template <typename L, typename R>
std::string format_binary_check(const char* op, const L& lhs, const R& rhs)
{
  std::ostringstream oss;
  oss << "lhs " << op << " rhs; lhs=" << lhs << " rhs=" << rhs;
  return oss.str();
}

}  // namespace turtledb::detail

#define TDB_CHECK(cond)                                                          \
  do {                                                                           \
    if (!(cond)) {                                                               \
      ::turtledb::detail::check_failed(__FILE__, __LINE__, #cond);               \
    }                                                                            \
  } while (0)

#define TDB_CHECK_OP(op, opname, lhs, rhs)                                       \
  do {                                                                           \
    auto&& tdb_l__ = (lhs);                                                      \
    auto&& tdb_r__ = (rhs);                                                      \
    if (!(tdb_l__ op tdb_r__)) {                                                 \
      ::turtledb::detail::check_failed(                                          \
          __FILE__, __LINE__,                                                    \
          std::string{#lhs " " opname " " #rhs "; "} +                           \
              ::turtledb::detail::format_binary_check(opname, tdb_l__, tdb_r__)); \
    }                                                                            \
  } while (0)

#define TDB_CHECK_EQ(a, b) TDB_CHECK_OP(==, "==", a, b)
#define TDB_CHECK_NE(a, b) TDB_CHECK_OP(!=, "!=", a, b)
#define TDB_CHECK_LT(a, b) TDB_CHECK_OP(<, "<", a, b)
#define TDB_CHECK_LE(a, b) TDB_CHECK_OP(<=, "<=", a, b)
#define TDB_CHECK_GT(a, b) TDB_CHECK_OP(>, ">", a, b)
#define TDB_CHECK_GE(a, b) TDB_CHECK_OP(>=, ">=", a, b)
