#pragma once

#include "graingraph/train_eval.hpp"

#include <string>
#include <vector>

namespace graingraph {

// Self-contained SVG documents (no external refs), deterministic for equal
// inputs. Both throw ValueError on empty input.

// Predicted vs. measured scatter with the identity line and an R^2 caption
// when it is defined.
std::string render_scatter_svg(const std::vector<SamplePrediction>& samples,
                               const std::string& title);

// Per-epoch training-loss polyline.
std::string render_loss_svg(const std::vector<double>& loss_trace, const std::string& title);

void write_svg_file(const std::string& svg, const std::string& path);

} // namespace graingraph
