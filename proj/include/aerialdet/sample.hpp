#pragma once

#include <string>

#include "aerialdet/errors.hpp"
#include "aerialdet/image.hpp"

namespace aerialdet {

// One classifier training/evaluation patch. person_id is 1..12 for subjects
// covered by the cross-validation splits, 0 for samples tied to no subject.
struct LabeledSample {
  GrayFrame patch;
  int label = 0;  // 1 = human, 0 = nonhuman
  int person_id = 0;
  std::string activity;  // empty when unknown

  void validate() const {
    if (label != 0 && label != 1) throw ConfigError("LabeledSample: label must be 0 or 1");
    if (person_id < 0) throw ConfigError("LabeledSample: person_id must be >= 0");
  }
};

}  // namespace aerialdet
