#pragma once

// Generated by derive.py. Do not edit.

#include <array>
#include <cstdint>

namespace oracle {

inline constexpr std::array<int, 3> kIdsA = {1, 70, 2};
inline constexpr std::array<int, 6> kIdsLa = {1, 222, 137, 221, 172, 2};
inline constexpr std::array<int, 14> kIdsEmoji = {1, 107, 122, 115, 37, 245, 164, 158, 135, 37, 105, 102, 126, 2};
inline constexpr std::array<int, 5> kPairIdsAB = {1, 70, 2, 71, 2};
inline constexpr std::array<int, 6> kPairTruncated = {1, 70, 70, 2, 71, 2};
inline constexpr std::array<std::size_t, 10> kFoldSizes3468 = {347, 347, 347, 347, 347, 347, 347, 347, 346, 346};
inline constexpr double kLr200Step20 = 0.001;
inline constexpr double kLr200Step110 = 0.0005;
inline constexpr double kLr200Step200 = 0.0;
inline constexpr double kLr200Step1 = 5e-05;
inline constexpr double kLr200Step21 = 0.0009944444444444445;
inline constexpr double kAdamWScalarStep1 = -0.099999999;
inline constexpr double kAdamWDecayOnly = 0.999;
inline constexpr std::array<double, 3> kAdamWThreeSteps = {0.4497500016666666, 0.4775003010479507, 0.48034163973264915};
inline constexpr std::array<double, 5> kGeluPoints = {-2.0, -0.5, 0.0, 1.0, 3.0};
inline constexpr std::array<double, 5> kGeluValues = {-0.04550026389635842, -0.15426876936299344, 0.0, 0.8413447460685429, 2.99595030590511};
inline constexpr std::array<double, 5> kGeluDerivatives = {-0.0852318010781969, 0.13250487534383715, 0.5, 1.0833154705876864, 1.011945647204184};
inline constexpr std::array<double, 2> kSoftmaxLn2 = {0.6666666666666666, 0.3333333333333333};
inline constexpr double kLn2 = 0.6931471805599453;
inline constexpr double kBceExample3Loss = 0.4948771503988687;
inline constexpr std::array<double, 6> kBceExample3Grad = {-0.019867153670352924, 0.04482357022833252, -0.0629234447996909, 0.08333333333333333, 0.00790431219626113, 0.12184309643833414};
inline constexpr double kPrecision2132 = 0.6666666666666666;
inline constexpr double kRecall2132 = 0.5;
inline constexpr double kF1_2132 = 0.5714285714285714;
inline constexpr double kAccuracy2132 = 0.625;
inline constexpr std::array<std::size_t, 4> kConfusionHand = {1, 1, 4, 2};
inline constexpr double kTaskCHand = 0.75;
inline constexpr double kMacroOneOfSix = 0.16666666666666666;
inline constexpr std::array<double, 2> kMeanTwoMembers = {0.55, 0.45};
inline constexpr double kStddev08_06 = 0.14142135623730956;
inline constexpr std::array<std::uint64_t, 3> kMt64Seed5489 = {14514284786278117030ULL, 4620546740167642908ULL, 13109570281517897720ULL};
inline constexpr std::array<std::uint64_t, 4> kDeriveSeed42 = {1835605136347105306ULL, 17049011220913387867ULL, 1728429178538081316ULL, 5293203542720018192ULL};
inline constexpr std::array<std::uint64_t, 3> kFnvEmptyAFoobar = {14695981039346656037ULL, 12638187200555641996ULL, 9625390261332436968ULL};
inline constexpr const char* kPairLabels200Seed2024 = "11000011011111000110100100111001001100101010001111011111011001101101010101100100010011101111000110111001101111110111100010010000110111110011100001010010010100000100010110010101010000111011111111111000";
inline constexpr std::size_t kPairLabelSum200Seed2024 = 107;

}  // namespace oracle
