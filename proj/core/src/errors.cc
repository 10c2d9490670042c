// Copyright 2026 The clickstat Authors
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

#include "clickstat/errors.h"

namespace clickstat {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kTruncation: return "truncation";
    case ErrorKind::kResource: return "resource";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kInput: return "input";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kDegenerateSupport: return "degenerate-support";
    case ErrorKind::kNumerical: return "numerical";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace clickstat
