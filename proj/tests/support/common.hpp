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

#ifndef TRAJACT__TESTS__SUPPORT__COMMON_HPP_
#define TRAJACT__TESTS__SUPPORT__COMMON_HPP_

#include <functional>
#include <string>

#include "trajact/autodiff/param_store.hpp"
#include "trajact/error.hpp"

namespace trajact::testing
{

/// Error code thrown by f, or "" when it returns normally.
inline std::string error_code(const std::function<void()> & f)
{
  try {
    f();
  } catch (const Error & e) {
    return e.code();
  }
  return "";
}

inline std::string error_message(const std::function<void()> & f)
{
  try {
    f();
  } catch (const Error & e) {
    return e.what();
  }
  return "";
}

template <typename Real>
void zero_params(ParamStore<Real> & store)
{
  for (auto & [name, e] : store.entries()) e.value.fill(Real(0));
}

}  // namespace trajact::testing

#endif  // TRAJACT__TESTS__SUPPORT__COMMON_HPP_
