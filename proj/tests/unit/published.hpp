#pragma once

#include <array>
#include <string>

namespace testing_support {

// Reported per-cell means: novelty, practicality, quality.
struct PublishedCell {
  const char* domain;
  const char* backend;
  double n_s;
  double p_s;
  double i_s;
};

inline constexpr std::array<PublishedCell, 9> kPublishedCells{{
    {"congestion control", "gemini-2.0-flash", 0.966, 0.857, 0.908},
    {"congestion control", "gpt-5", 0.954, 0.838, 0.892},
    {"congestion control", "qwen-plus-1220", 0.968, 0.828, 0.892},
    {"traffic engineering", "gemini-2.0-flash", 0.980, 0.834, 0.900},
    {"traffic engineering", "gpt-5", 0.947, 0.837, 0.888},
    {"traffic engineering", "qwen-plus-1220", 0.980, 0.843, 0.906},
    {"network verification", "gemini-2.0-flash", 0.977, 0.833, 0.899},
    {"network verification", "gpt-5", 0.972, 0.833, 0.894},
    {"network verification", "qwen-plus-1220", 0.987, 0.830, 0.902},
}};

// Traffic engineering on gemini, system vs brief-only.
inline constexpr double kAblationSystem = 0.90;
inline constexpr double kAblationBaseline = 0.634;
inline constexpr double kAblationRelative = 0.42;

inline constexpr double kCellTolerance = 0.005;

}  // namespace testing_support
