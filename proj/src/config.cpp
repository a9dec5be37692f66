#include "tokengraft/config.hpp"

#include <cmath>
#include <string>

#include "tokengraft/error.hpp"

namespace tokengraft {

void HeuristicConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("temperature must be a positive finite number, got " +
                      std::to_string(temperature));
  }
  if (k_neighbors == 0) throw ConfigError("k must be at least 1");
  if (!(global_weight >= 0.0 && global_weight <= 1.0)) {
    throw ConfigError("global weight must lie in [0, 1], got " +
                      std::to_string(global_weight));
  }
  if (similarity_threshold &&
      !(*similarity_threshold >= -1.0 && *similarity_threshold <= 1.0)) {
    throw ConfigError("similarity threshold must lie in [-1, 1], got " +
                      std::to_string(*similarity_threshold));
  }
}

}  // namespace tokengraft
