#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "autolfd/trajectory.hpp"

namespace autolfd {

struct SvgSeries {
  std::string label;
  std::string color;         // e.g. "#d62728"
  Eigen::MatrixXd points;    // N x 2 positions
  double stroke_width = 2.0;
  bool dashed = false;
};

// Standalone overlay plot: one polyline per series, circle markers with
// data-x/data-y attributes at constraint points, and a text legend.
// Byte-deterministic for fixed input.
void emit_svg(const std::vector<SvgSeries>& series, const std::vector<ConstraintPoint>& markers,
              const std::string& path);

}  // namespace autolfd
