// SPDX-License-Identifier: Apache-2.0
#include "fillmass/labels.hpp"

#include <string>

#include "fillmass/errors.hpp"

namespace fillmass {

FillingType filling_type_from_index(int index) {
  if (index < 0 || index >= kNumFillingTypes) {
    throw DomainError("filling type index out of range: " + std::to_string(index));
  }
  return static_cast<FillingType>(index);
}

FillingLevel filling_level_from_index(int index) {
  if (index < 0 || index >= kNumFillingLevels) {
    throw DomainError("filling level index out of range: " + std::to_string(index));
  }
  return static_cast<FillingLevel>(index);
}

ContainerType container_type_from_index(int index) {
  if (index < 0 || index >= kNumContainerTypes) {
    throw DomainError("container type index out of range: " + std::to_string(index));
  }
  return static_cast<ContainerType>(index);
}

std::string_view name_of(FillingType t) { return kFillingTypeNames[index_of(t)]; }
std::string_view name_of(ContainerType c) { return kContainerTypeNames[index_of(c)]; }

std::optional<FillingType> parse_filling_type(std::string_view name) {
  for (int i = 0; i < kNumFillingTypes; ++i) {
    if (kFillingTypeNames[i] == name) return static_cast<FillingType>(i);
  }
  return std::nullopt;
}

std::optional<FillingLevel> level_from_percent(int percent) {
  for (int i = 0; i < kNumFillingLevels; ++i) {
    if (kFillingLevelPercents[i] == percent) return static_cast<FillingLevel>(i);
  }
  return std::nullopt;
}

std::optional<ContainerType> parse_container_type(std::string_view name) {
  for (int i = 0; i < kNumContainerTypes; ++i) {
    if (kContainerTypeNames[i] == name) return static_cast<ContainerType>(i);
  }
  return std::nullopt;
}

}  // namespace fillmass
