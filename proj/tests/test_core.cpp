#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "thermofuse/core.hpp"

using namespace thermofuse;

namespace {

FocalStack three_frames(std::size_t w = 4, std::size_t h = 4) {
    FocalStack s;
    for (int i = 0; i < 3; ++i) s.frames.emplace_back(w, h, 20.0 + i);
    return s;
}

} // namespace

TEST(Grid, ConstructsFromValuesRowMajor) {
    ThermalImage img(3, 2, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(img.width(), 3u);
    EXPECT_EQ(img.height(), 2u);
    EXPECT_EQ(img(2, 0), 3.0);
    EXPECT_EQ(img(0, 1), 4.0);
}

TEST(Grid, RejectsWrongValueCount) {
    try {
        ThermalImage img(3, 2, {1, 2, 3});
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DimensionMismatch);
    }
}

TEST(Grid, ClampedAccessReplicatesEdges) {
    ThermalImage img(2, 2, {1, 2, 3, 4});
    EXPECT_EQ(img.clamped(-5, -1), 1.0);
    EXPECT_EQ(img.clamped(7, 0), 2.0);
    EXPECT_EQ(img.clamped(-1, 9), 3.0);
    EXPECT_EQ(img.clamped(3, 3), 4.0);
}

TEST(ValidateStack, AcceptsWellFormedStack) {
    auto s = three_frames();
    s.lens_positions = std::vector<double>{0.0, 1.0, 2.0};
    EXPECT_TRUE(validate_stack(s).ok());
}

TEST(ValidateStack, ReportsDimensionMismatchByFrame) {
    auto s = three_frames();
    s.frames[2] = ThermalImage(4, 5, 20.0);
    const auto report = validate_stack(s);
    ASSERT_EQ(report.violations.size(), 1u);
    EXPECT_EQ(report.violations[0].frame, 2u);
    EXPECT_NE(report.violations[0].message.find("dimension mismatch at frame 2"), std::string::npos);
}

TEST(ValidateStack, ReportsNonFinitePixel) {
    auto s = three_frames();
    s.frames[0](1, 1) = std::numeric_limits<double>::quiet_NaN();
    const auto report = validate_stack(s);
    ASSERT_EQ(report.violations.size(), 1u);
    EXPECT_EQ(report.violations[0].frame, 0u);
    EXPECT_NE(report.violations[0].message.find("frame 0, pixel (1,1)"), std::string::npos);
}

TEST(ValidateStack, ReportsEmptyStackAndEmptyFrames) {
    EXPECT_FALSE(validate_stack(FocalStack{}).ok());
    auto s = three_frames();
    s.frames[1] = ThermalImage();
    const auto report = validate_stack(s);
    ASSERT_FALSE(report.ok());
    EXPECT_EQ(report.violations[0].frame, 1u);
}

TEST(ValidateStack, ChecksLensPositions) {
    auto s = three_frames();
    s.lens_positions = std::vector<double>{0.0, 1.0};
    EXPECT_FALSE(validate_stack(s).ok());
    s.lens_positions = std::vector<double>{0.0, 2.0, 2.0};
    const auto report = validate_stack(s);
    ASSERT_EQ(report.violations.size(), 1u);
    EXPECT_EQ(report.violations[0].frame, 2u);
}

TEST(ValidateStack, DoesNotMutateInput) {
    auto s = three_frames();
    s.frames[1](0, 0) = std::numeric_limits<double>::infinity();
    const auto copy = s;
    (void)validate_stack(s);
    EXPECT_EQ(copy.frames[0], s.frames[0]);
    EXPECT_TRUE(std::isinf(s.frames[1](0, 0)));
}

TEST(RequireValid, ThrowsTypedErrors) {
    try {
        require_valid(FocalStack{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyStack);
    }
    auto s = three_frames();
    s.frames[1] = ThermalImage(3, 4, 0.0);
    try {
        require_valid(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ValidationError);
        EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos);
    }
}

TEST(FusionConfig, DefaultsAreValid) {
    FusionConfig cfg;
    EXPECT_EQ(cfg.window, 5u);
    EXPECT_EQ(cfg.frames_per_peak, 4u);
    EXPECT_EQ(cfg.peak_min_separation, 8u);
    EXPECT_DOUBLE_EQ(cfg.peak_threshold_frac, 0.10);
    EXPECT_EQ(cfg.zero_weight_policy, ZeroWeightPolicy::UniformFallback);
    EXPECT_NO_THROW(validate_config(cfg));
}

TEST(FusionConfig, RejectsBadKnobs) {
    auto expect_invalid = [](FusionConfig cfg) {
        try {
            validate_config(cfg);
            ADD_FAILURE() << "accepted an invalid config";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::InvalidConfig);
        }
    };
    FusionConfig c;
    c.window = 4;
    expect_invalid(c);
    c = {};
    c.window = 1;
    expect_invalid(c);
    c = {};
    c.frames_per_peak = 0;
    expect_invalid(c);
    c = {};
    c.peak_min_separation = 0;
    expect_invalid(c);
    c = {};
    c.peak_threshold_frac = 0.0;
    expect_invalid(c);
    c.peak_threshold_frac = 1.5;
    expect_invalid(c);
}
