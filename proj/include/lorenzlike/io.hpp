// CSV output with a header row and 17 significant digits for every floating-point field.
#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "lorenzlike/integrate.hpp"
#include "lorenzlike/model.hpp"

namespace lorenzlike {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  template <class... Fields>
  void row(const Fields&... fields) {
    if (sizeof...(Fields) != columns_) throw std::logic_error("CSV row width does not match the header");
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(fields), first = false), ...);
    out_ << '\n';
  }

  void flush() { out_.flush(); }

 private:
  template <class T>
  static std::string cell(const T& v) {
    if constexpr (std::is_floating_point_v<T>) {
      return format_double(static_cast<double>(v));
    } else if constexpr (std::is_same_v<T, bool>) {
      return v ? "1" : "0";
    } else if constexpr (std::is_integral_v<T>) {
      return std::to_string(v);
    } else {
      return quote(std::string_view(v));
    }
  }

  static std::string quote(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  }

  std::ofstream out_;
  std::size_t columns_;
};

/// t,x,v,u plus a color in [0,1] that runs linearly in time over the whole arc.
inline void write_trajectory_csv(const std::string& path, const std::vector<const Trajectory<3>*>& arcs,
                                 double t_offset_second = 0.0) {
  CsvWriter csv(path, {"t", "x", "v", "u", "color"});
  double t_first = 0.0, t_last = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    const auto* tr = arcs[k];
    if (!tr || tr->times.empty()) continue;
    const double off = k == 0 ? 0.0 : t_offset_second;
    if (!any) t_first = tr->times.front() + off;
    t_last = tr->times.back() + off;
    any = true;
  }
  const double span = t_last > t_first ? t_last - t_first : 1.0;
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    const auto* tr = arcs[k];
    if (!tr) continue;
    const double off = k == 0 ? 0.0 : t_offset_second;
    for (std::size_t i = 0; i < tr->times.size(); ++i) {
      if (k > 0 && i == 0) continue;  // first node repeats the end of the previous arc
      const double t = tr->times[i] + off;
      const auto& y = tr->states[i];
      csv.row(t, y[0], y[1], y[2], (t - t_first) / span);
    }
  }
}

}  // namespace lorenzlike
