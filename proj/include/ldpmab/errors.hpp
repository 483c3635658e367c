// Copyright 2026 The ldpmab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef LDPMAB_ERRORS_HPP_
#define LDPMAB_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ldpmab {

// A caller broke a documented precondition (e.g. refining an inactive bin).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid experiment configuration or input file. The CLI maps this to
// exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ldpmab

#endif  // LDPMAB_ERRORS_HPP_
