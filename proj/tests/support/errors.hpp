#pragma once

#include <doctest.h>

#include "hcshape/error.hpp"

// Error code raised by fn(), failing the current test if nothing is thrown.
template <typename Fn>
hcshape::Errc code_of(Fn&& fn) {
  try {
    fn();
  } catch (const hcshape::Error& e) {
    return e.code();
  }
  FAIL("expected an hcshape::Error");
  return hcshape::Errc::Io;
}
