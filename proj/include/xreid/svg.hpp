// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "xreid/io.hpp"

namespace xreid {

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;  // equal length
};

// fixed-size line plot with axes, ticks, and a legend; metadata goes into an
// XML comment so the header invariant holds for SVG outputs too
void write_line_plot_svg(std::ostream& os, const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<SvgSeries>& series,
                         const MetaInfo* meta = nullptr);

}  // namespace xreid
