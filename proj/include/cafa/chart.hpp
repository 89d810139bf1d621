#ifndef CAFA_CHART_HPP
#define CAFA_CHART_HPP

#include <optional>
#include <string>
#include <vector>

namespace cafa {

// Static SVG charts for reports. Output depends only on the arguments; the
// optional timestamp lands in a <metadata> element and nowhere else.

struct BarSeries {
  std::string name;
  std::vector<double> values;  // one per label
};

// Horizontal grouped bar chart, one group per label, in the given order.
std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<BarSeries>& series,
                          const std::optional<std::string>& timestamp = std::nullopt);

struct SwarmPanel {
  std::string title;
  // points[f] = attribution values of feature f across explained instances;
  // shade[f][i] in [0, 1] colours point i (low = blue, high = red).
  std::vector<std::vector<double>> points;
  std::vector<std::vector<double>> shade;
};

// Beeswarm-style summary plot: one row per label, one panel per method,
// points jittered vertically by a deterministic hash so overlapping values
// stay visible.
std::string summary_svg(const std::vector<std::string>& labels,
                        const std::vector<SwarmPanel>& panels,
                        const std::optional<std::string>& timestamp = std::nullopt);

// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace cafa

#endif  // CAFA_CHART_HPP
