// Copyright 2026 the gtm authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace gtm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes do not line up for the requested operation.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A hyperparameter or config combination is invalid.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data is malformed (ragged rows, bad cells, irregular timestamps...).
class DataError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf or another numeric failure was produced.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace gtm
