#pragma once

#include <string>

#include "mixboost/booster.hpp"

namespace mixboost {

/// Versioned JSON model format. Trees are stored as preorder node lists
/// {feature, threshold, left, right, value}; the projection stores its full
/// weight matrix and offsets. Reals survive a save/load round trip
/// bit-exactly, so a reloaded model predicts identically.
std::string to_model_json(const Ensemble& ensemble);
Ensemble from_model_json(const std::string& text);

void save_model(const Ensemble& ensemble, const std::string& path);
Ensemble load_model(const std::string& path);

} // namespace mixboost
