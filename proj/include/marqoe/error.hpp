// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace marqoe {

// Base of every error the library throws. Callers that only need "did it
// fail" catch this; tests catch the concrete kinds below.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define MARQOE_DEFINE_ERROR(Name)                                              \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {}       \
  }

// geometry
MARQOE_DEFINE_ERROR(InvalidPose);
// trace
MARQOE_DEFINE_ERROR(SchemaError);
MARQOE_DEFINE_ERROR(OrderError);
MARQOE_DEFINE_ERROR(EmptyTrace);
MARQOE_DEFINE_ERROR(OutOfRange);
MARQOE_DEFINE_ERROR(ManifestError);
// network
MARQOE_DEFINE_ERROR(InvalidParameter);
MARQOE_DEFINE_ERROR(InfiniteServiceTime);
MARQOE_DEFINE_ERROR(Unstable);
MARQOE_DEFINE_ERROR(Infeasible);
// predict
MARQOE_DEFINE_ERROR(NoHistory);
// allocate / eval
MARQOE_DEFINE_ERROR(InvalidInput);
MARQOE_DEFINE_ERROR(ConfigError);
MARQOE_DEFINE_ERROR(IoError);
// agent
MARQOE_DEFINE_ERROR(NotFound);
MARQOE_DEFINE_ERROR(EmptyRange);

#undef MARQOE_DEFINE_ERROR

}  // namespace marqoe
