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

#pragma once

#include <gtest/gtest.h>

#include "clickstat/errors.h"

#define EXPECT_CLICKSTAT_ERROR(statement, expected_kind)                          \
  do {                                                                            \
    try {                                                                         \
      statement;                                                                  \
      ADD_FAILURE() << "expected clickstat::Error from " #statement;              \
    } catch (const ::clickstat::Error& e) {                                       \
      EXPECT_EQ(e.kind(), expected_kind)                                          \
          << "got " << ::clickstat::error_kind_name(e.kind()) << ": " << e.what(); \
    }                                                                             \
  } while (0)
