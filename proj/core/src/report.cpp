#include "permdrift/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "permdrift/error.hpp"

namespace permdrift {

CellCounts summarize_counts(const EvalMatrix& matrix, const Thresholds& thresholds, Metric metric) {
  if (matrix.cells.empty()) throw Error(ErrorCode::Empty, "matrix has no cells");
  CellCounts counts;
  for (const auto& cell : matrix.cells) {
    switch (classify_cell(cell.scores.get(metric), thresholds)) {
      case CellClass::Red: ++counts.red; break;
      case CellClass::Yellow: ++counts.yellow; break;
      case CellClass::Green: ++counts.green; break;
    }
  }
  return counts;
}

std::map<int, double> train_year_averages(const EvalMatrix& matrix, Metric metric) {
  if (matrix.cells.empty()) throw Error(ErrorCode::Empty, "matrix has no cells");
  std::map<int, std::pair<double, std::size_t>> acc;
  for (const auto& cell : matrix.cells) {
    auto& [sum, n] = acc[cell.train_year];
    sum += cell.scores.get(metric);
    ++n;
  }
  std::map<int, double> out;
  for (const auto& [year, p] : acc) out[year] = p.first / static_cast<double>(p.second);
  return out;
}

std::string_view to_string(HeatClass c) noexcept {
  switch (c) {
    case HeatClass::Yellow: return "yellow";
    case HeatClass::Red: return "red";
    case HeatClass::Green: return "green";
    case HeatClass::Neutral: return "neutral";
  }
  return "neutral";
}

std::string_view fill_color(HeatClass c) noexcept {
  switch (c) {
    case HeatClass::Yellow: return "#FFD400";
    case HeatClass::Red: return "#D7261E";
    case HeatClass::Green: return "#2E933C";
    case HeatClass::Neutral: return "#EEEEEE";
  }
  return "#EEEEEE";
}

namespace {

HeatClass from_cell_class(CellClass c) {
  switch (c) {
    case CellClass::Yellow: return HeatClass::Yellow;
    case CellClass::Red: return HeatClass::Red;
    case CellClass::Green: return HeatClass::Green;
  }
  return HeatClass::Neutral;
}

std::optional<HeatClass> parse_heat_class(std::string_view text) {
  for (auto c : {HeatClass::Yellow, HeatClass::Red, HeatClass::Green, HeatClass::Neutral}) {
    if (text == to_string(c)) return c;
  }
  return std::nullopt;
}

Heatmap empty_grid(std::vector<int> rows, std::vector<int> cols) {
  Heatmap h;
  h.rows = std::move(rows);
  h.cols = std::move(cols);
  h.values.assign(h.rows.size() * h.cols.size(), std::nullopt);
  h.classes.assign(h.values.size(), HeatClass::Neutral);
  return h;
}

std::size_t position(const std::vector<int>& v, int year) {
  return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), year) - v.begin());
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_or_throw(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing " + path.string());
}

std::string render(const Heatmap& h, const HeatmapSpec& spec) {
  return spec.format == HeatmapFormat::Svg ? render_svg(h, spec) : render_csv(h);
}

}  // namespace

Heatmap build_heatmap(const EvalMatrix& matrix, const HeatmapSpec& spec) {
  if (spec.coloring != Coloring::ThresholdClasses) {
    throw Error(ErrorCode::IncompatibleSpec, "metric matrices are colored by threshold classes");
  }
  std::set<int> rows, cols;
  for (const auto& c : matrix.cells) {
    rows.insert(c.train_year);
    cols.insert(c.test_year);
  }
  // Skipped train years keep their row so the grid stays intact.
  for (const auto& s : matrix.skipped) rows.insert(s.year);
  for (int y : matrix.years) cols.insert(y);
  Heatmap h = empty_grid({rows.begin(), rows.end()}, {cols.begin(), cols.end()});
  for (const auto& c : matrix.cells) {
    const std::size_t k = position(h.rows, c.train_year) * h.cols.size() + position(h.cols, c.test_year);
    const double v = c.scores.get(spec.metric);
    h.values[k] = v;
    h.classes[k] = from_cell_class(classify_cell(v, spec.thresholds));
  }
  return h;
}

Heatmap build_heatmap(const KSMatrix& ks, const HeatmapSpec& spec) {
  if (spec.coloring != Coloring::SignificanceBinary) {
    throw Error(ErrorCode::IncompatibleSpec, "KS matrices are colored by significance");
  }
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw Error(ErrorCode::BadConfig, "alpha must lie in (0, 1)");
  Heatmap h = empty_grid(ks.years, ks.years);
  for (const auto& [key, r] : ks.results) {
    const std::size_t k = position(h.rows, key.first) * h.cols.size() + position(h.cols, key.second);
    h.values[k] = r.p_value;
    h.classes[k] = r.p_value <= spec.alpha ? HeatClass::Red : HeatClass::Neutral;
  }
  return h;
}

std::string render_svg(const Heatmap& h, const HeatmapSpec& spec) {
  constexpr int cell = 48, left = 64, top = 48;
  const int width = left + cell * static_cast<int>(h.cols.size()) + 16;
  const int height = top + cell * static_cast<int>(h.rows.size()) + 40;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  if (!spec.title.empty()) {
    out << "<text x=\"" << left << "\" y=\"16\" font-size=\"13\">" << xml_escape(spec.title) << "</text>\n";
  }
  for (std::size_t c = 0; c < h.cols.size(); ++c) {
    out << "<text class=\"col-label\" x=\"" << left + cell * static_cast<int>(c) + cell / 2 << "\" y=\""
        << top - 6 << "\" text-anchor=\"middle\">" << h.cols[c] << "</text>\n";
  }
  for (std::size_t r = 0; r < h.rows.size(); ++r) {
    const int y = top + cell * static_cast<int>(r);
    out << "<text class=\"row-label\" x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4
        << "\" text-anchor=\"end\">" << h.rows[r] << "</text>\n";
    for (std::size_t c = 0; c < h.cols.size(); ++c) {
      const int x = left + cell * static_cast<int>(c);
      const HeatClass cls = h.cell_class(r, c);
      out << "<rect class=\"cell\" data-class=\"" << to_string(cls) << "\" x=\"" << x << "\" y=\"" << y
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"" << fill_color(cls)
          << "\" stroke=\"#FFFFFF\"/>\n";
      if (spec.labels) {
        if (auto v = h.value(r, c)) {
          out << "<text class=\"value\" x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
              << "\" text-anchor=\"middle\">" << fixed3(*v) << "</text>\n";
        }
      }
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_csv(const Heatmap& h) {
  std::ostringstream out;
  out << "row,col,value,class\n";
  for (std::size_t r = 0; r < h.rows.size(); ++r) {
    for (std::size_t c = 0; c < h.cols.size(); ++c) {
      out << h.rows[r] << ',' << h.cols[c] << ',';
      if (auto v = h.value(r, c)) out << format_double(*v);
      out << ',' << to_string(h.cell_class(r, c)) << '\n';
    }
  }
  return out.str();
}

Heatmap read_heatmap_csv(std::istream& in) {
  std::string line;
  std::int64_t line_no = 0;
  if (!detail::next_line(in, line, line_no) || line != "row,col,value,class") {
    throw Error(ErrorCode::SchemaMismatch, "heatmap header must be 'row,col,value,class'", 1);
  }
  struct Entry {
    int row, col;
    std::optional<double> value;
    HeatClass cls;
  };
  std::vector<Entry> entries;
  std::set<int> rows, cols;
  std::vector<std::string_view> f;
  while (detail::next_line(in, line, line_no)) {
    detail::split_fields(line, f);
    if (f.size() != 4) throw Error(ErrorCode::SchemaMismatch, "expected 4 fields", line_no);
    auto r = detail::parse_number<int>(f[0]);
    auto c = detail::parse_number<int>(f[1]);
    auto cls = parse_heat_class(f[3]);
    std::optional<double> v;
    if (!f[2].empty()) {
      v = detail::parse_number<double>(f[2]);
      if (!v) throw Error(ErrorCode::SchemaMismatch, "bad value", line_no, "value");
    }
    if (!r || !c || !cls) throw Error(ErrorCode::SchemaMismatch, "bad heatmap row", line_no);
    entries.push_back({*r, *c, v, *cls});
    rows.insert(*r);
    cols.insert(*c);
  }
  Heatmap h = empty_grid({rows.begin(), rows.end()}, {cols.begin(), cols.end()});
  for (const auto& e : entries) {
    const std::size_t k = position(h.rows, e.row) * h.cols.size() + position(h.cols, e.col);
    h.values[k] = e.value;
    h.classes[k] = e.cls;
  }
  return h;
}

void emit_heatmap(const EvalMatrix& matrix, const HeatmapSpec& spec, const std::filesystem::path& path) {
  write_or_throw(path, render(build_heatmap(matrix, spec), spec));
}

void emit_heatmap(const KSMatrix& ks, const HeatmapSpec& spec, const std::filesystem::path& path) {
  write_or_throw(path, render(build_heatmap(ks, spec), spec));
}

std::string render_bar_svg(const std::map<int, double>& averages, const std::string& title) {
  constexpr int bar = 40, gap = 12, left = 48, top = 32, plot = 200;
  const int width = left + static_cast<int>(averages.size()) * (bar + gap) + 16;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << top + plot + 40
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  if (!title.empty()) out << "<text x=\"" << left << "\" y=\"16\" font-size=\"13\">" << xml_escape(title) << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot << "\" x2=\"" << width - 8 << "\" y2=\"" << top + plot
      << "\" stroke=\"#333333\"/>\n";
  int x = left + gap / 2;
  for (const auto& [year, value] : averages) {
    const int h = static_cast<int>(std::clamp(value, 0.0, 1.0) * plot + 0.5);
    out << "<rect class=\"bar\" x=\"" << x << "\" y=\"" << top + plot - h << "\" width=\"" << bar << "\" height=\""
        << h << "\" fill=\"#4C72B0\"/>\n";
    out << "<text x=\"" << x + bar / 2 << "\" y=\"" << top + plot - h - 4 << "\" text-anchor=\"middle\">"
        << fixed3(value) << "</text>\n";
    out << "<text x=\"" << x + bar / 2 << "\" y=\"" << top + plot + 16 << "\" text-anchor=\"middle\">" << year
        << "</text>\n";
    x += bar + gap;
  }
  out << "</svg>\n";
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) { write_or_throw(path, text); }

}  // namespace permdrift
