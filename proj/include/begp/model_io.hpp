#pragma once

#include <string>

#include "begp/begp_model.hpp"

namespace begp {

struct ModelIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// JSON snapshot of a fitted model.  Doubles use shortest round-trip decimal
// form, so save -> load -> predict is bit-for-bit identical.
std::string model_to_json(const BegpModel& model);
BegpModel model_from_json(const std::string& json_text);

void save_model(const BegpModel& model, const std::string& path);
BegpModel load_model(const std::string& path);

}  // namespace begp
