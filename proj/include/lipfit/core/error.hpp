// Copyright 2026 The lipfit Authors
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

namespace lipfit {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments, dimension mismatches, malformed configuration.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Missing or malformed input data (frames, landmark files, manifests, transcripts).
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or divergence during optimisation.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace lipfit
