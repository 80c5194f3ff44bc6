#pragma once

#include <doctest.h>

#include "loopdyn/error.hpp"

namespace testutil {

// Kind of the loopdyn::Error thrown by `fn`; fails the test if none is thrown.
loopdyn::ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const loopdyn::Error& e) {
    return e.kind();
  }
  FAIL("expected a loopdyn::Error");
  return loopdyn::ErrorKind::Io;
}

}  // namespace testutil
