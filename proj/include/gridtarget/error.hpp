// Copyright 2026 The gridtarget Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace gridtarget {

// Base of every error raised by the library. The CLI maps all of these to
// exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GRIDTARGET_DEFINE_ERROR(Name) \
  class Name : public Error {         \
   public:                            \
    using Error::Error;               \
  }

GRIDTARGET_DEFINE_ERROR(ArgumentError);
GRIDTARGET_DEFINE_ERROR(FormatError);
GRIDTARGET_DEFINE_ERROR(CorruptionError);
GRIDTARGET_DEFINE_ERROR(DegenerateDataError);
GRIDTARGET_DEFINE_ERROR(TrainingError);
GRIDTARGET_DEFINE_ERROR(MetricError);
GRIDTARGET_DEFINE_ERROR(FitError);
GRIDTARGET_DEFINE_ERROR(GeometryError);

#undef GRIDTARGET_DEFINE_ERROR

}  // namespace gridtarget
