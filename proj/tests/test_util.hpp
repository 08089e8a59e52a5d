#pragma once

#include "seqctl/errors.hpp"

#include <gtest/gtest.h>

#include <string>

// Asserts that `expr` throws seqctl::Error carrying `code`.
#define EXPECT_SEQCTL_ERROR(expr, error_code)                                                     \
    do {                                                                                          \
        bool caught_ = false;                                                                     \
        try {                                                                                     \
            (void)(expr);                                                                         \
        } catch (const seqctl::Error& e_) {                                                       \
            caught_ = true;                                                                       \
            EXPECT_EQ(e_.code(), error_code) << "message: " << e_.what();                         \
        }                                                                                         \
        EXPECT_TRUE(caught_) << "expected seqctl::Error " << seqctl::to_string(error_code);       \
    } while (0)
