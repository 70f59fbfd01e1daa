#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spreadgrad/curve_gradient.hpp"
#include "spreadgrad/rayleigh.hpp"

namespace spreadgrad {

struct SvgStyle {
    double width_px = 900.0;
    double margin_px = 40.0;
    std::string title;
};

/// Grey dot per location, one arrow (class "arrow") per significant location in
/// the direction of spread with length proportional to median speed, and a
/// legend arrow labelled in km/year.
std::string quiver_svg(const std::vector<SpreadSummary>& field, const SvgStyle& style = {});

/// Grey dots for sites, black dots (class "rayleigh") at Rayleigh flags, red
/// segments (class "box-side") for sides of flagged boxes with significant outward spread.
std::string jumps_svg(const std::vector<Location>& sites, const std::vector<RayleighResult>& rayleigh,
                      const std::vector<BoxTestResult>& boxes, const SvgStyle& style = {});

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace spreadgrad
