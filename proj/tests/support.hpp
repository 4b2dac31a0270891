#pragma once

#include <gtest/gtest.h>

#include "bridge.hpp"

namespace jagq::testing {

inline ::testing::AssertionResult agree(const JaggedArray& engine, const JaggedArray& ref, double rel = 1e-12) {
    if (auto why = mismatch(engine, ref, rel)) return ::testing::AssertionFailure() << *why;
    return ::testing::AssertionSuccess();
}

template <typename F>
ErrorCode error_code(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Internal;
}

}  // namespace jagq::testing
