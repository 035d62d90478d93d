// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace fillmass {

enum class FillingType { empty = 0, pasta = 1, rice = 2, water = 3 };

/// Discretized fill fraction. Index order is fixed: 0 -> 0 %, 1 -> 50 %, 2 -> 90 %.
enum class FillingLevel { percent0 = 0, percent50 = 1, percent90 = 2 };

enum class ContainerType { cup = 0, glass = 1, box = 2 };

inline constexpr int kNumFillingTypes = 4;
inline constexpr int kNumFillingLevels = 3;
inline constexpr int kNumContainerTypes = 3;

inline constexpr std::array<std::string_view, kNumFillingTypes> kFillingTypeNames = {
    "empty", "pasta", "rice", "water"};
inline constexpr std::array<int, kNumFillingLevels> kFillingLevelPercents = {0, 50, 90};
inline constexpr std::array<std::string_view, kNumContainerTypes> kContainerTypeNames = {
    "cup", "glass", "box"};

constexpr int index_of(FillingType t) { return static_cast<int>(t); }
constexpr int index_of(FillingLevel l) { return static_cast<int>(l); }
constexpr int index_of(ContainerType c) { return static_cast<int>(c); }

constexpr int percent_of(FillingLevel l) { return kFillingLevelPercents[index_of(l)]; }

/// Throw DomainError on out-of-range indices.
FillingType filling_type_from_index(int index);
FillingLevel filling_level_from_index(int index);
ContainerType container_type_from_index(int index);

std::string_view name_of(FillingType t);
std::string_view name_of(ContainerType c);

std::optional<FillingType> parse_filling_type(std::string_view name);
std::optional<FillingLevel> level_from_percent(int percent);
std::optional<ContainerType> parse_container_type(std::string_view name);

}  // namespace fillmass
