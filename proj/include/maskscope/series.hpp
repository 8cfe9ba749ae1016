#pragma once

#include <optional>
#include <vector>

#include "maskscope/civil_date.hpp"

namespace maskscope {

/// A dated observation; an empty value marks a day with no defined metric.
struct SeriesPoint {
  Date date;
  std::optional<double> value;

  friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

using DatedSeries = std::vector<SeriesPoint>;

inline std::vector<double> defined_values(const DatedSeries& s) {
  std::vector<double> out;
  out.reserve(s.size());
  for (const auto& p : s)
    if (p.value) out.push_back(*p.value);
  return out;
}

}  // namespace maskscope
