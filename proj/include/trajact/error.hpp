// Copyright 2026 The trajact Authors
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

#ifndef TRAJACT__ERROR_HPP_
#define TRAJACT__ERROR_HPP_

#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace trajact
{

// Every failure carries a short machine-readable code ("shape_mismatch",
// "parse_error", ...) so the CLI can print a single parseable line.
class Error : public std::runtime_error
{
public:
  Error(std::string code, const std::string & message)
  : std::runtime_error(message), code_(std::move(code))
  {
  }

  const std::string & code() const { return code_; }

private:
  std::string code_;
};

namespace detail
{
inline void append(std::ostringstream &) {}

template <typename T, typename... Rest>
void append(std::ostringstream & oss, T && first, Rest &&... rest)
{
  oss << std::forward<T>(first);
  append(oss, std::forward<Rest>(rest)...);
}
}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(const std::string & code, Args &&... args)
{
  std::ostringstream oss;
  detail::append(oss, std::forward<Args>(args)...);
  throw Error(code, oss.str());
}

// Warning sink. Defaults to stderr; tests swap it to capture messages.
using WarningSink = std::function<void(const std::string &)>;

inline WarningSink & warning_sink()
{
  static WarningSink sink = [](const std::string & msg) { std::cerr << "warning: " << msg << '\n'; };
  return sink;
}

template <typename... Args>
void warn(Args &&... args)
{
  std::ostringstream oss;
  detail::append(oss, std::forward<Args>(args)...);
  if (warning_sink()) {
    warning_sink()(oss.str());
  }
}

}  // namespace trajact

#endif  // TRAJACT__ERROR_HPP_
