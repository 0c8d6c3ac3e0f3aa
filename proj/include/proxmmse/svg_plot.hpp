#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace proxmmse::svg {

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<double> x;
    std::vector<double> y;
};

inline constexpr int kPanelWidth = 800;
inline constexpr int kPanelHeight = 600;

/// Line charts stacked vertically, one 800x600 panel each.
void write_panels(std::ostream& out, const std::vector<Panel>& panels);

}  // namespace proxmmse::svg
