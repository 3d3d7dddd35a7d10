#ifndef TSAD_CONFIG_HPP
#define TSAD_CONFIG_HPP

#include <string>
#include <vector>

#include "tsad/eval.hpp"

namespace tsad::detail {

// Shortest fixed rendering that round-trips a double exactly.
std::string format_double(double v);

// Parses the canonical config format (see experiment_config_text) and
// applies every recognized key onto cfg/modes. Unknown sections or keys are
// collected and reported in a single ArgumentError.
void apply_config_text(const std::string& text, ExperimentConfig& cfg,
                       std::vector<Method>& modes);

} // namespace tsad::detail

#endif
