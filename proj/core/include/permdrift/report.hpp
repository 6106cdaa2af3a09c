#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "permdrift/drift.hpp"
#include "permdrift/protocol.hpp"

namespace permdrift {

struct CellCounts {
  std::size_t red = 0;
  std::size_t yellow = 0;
  std::size_t green = 0;

  std::size_t total() const noexcept { return red + yellow + green; }
  bool operator==(const CellCounts&) const = default;
};

/// classify_cell over every present cell. Throws Empty on a matrix without cells.
CellCounts summarize_counts(const EvalMatrix& matrix, const Thresholds& thresholds = {},
                            Metric metric = Metric::Accuracy);

/// Mean of `metric` over each train year's cells.
std::map<int, double> train_year_averages(const EvalMatrix& matrix, Metric metric = Metric::Accuracy);

enum class Coloring : std::uint8_t { ThresholdClasses, SignificanceBinary };
enum class HeatmapFormat : std::uint8_t { Svg, Csv };
enum class HeatClass : std::uint8_t { Yellow, Red, Green, Neutral };

std::string_view to_string(HeatClass c) noexcept;
/// Fill colors: yellow #FFD400, red #D7261E, green #2E933C, neutral #EEEEEE.
std::string_view fill_color(HeatClass c) noexcept;

struct HeatmapSpec {
  Coloring coloring = Coloring::ThresholdClasses;
  Thresholds thresholds;
  double alpha = 0.05;
  Metric metric = Metric::Accuracy;  // metric matrices only
  bool labels = true;
  HeatmapFormat format = HeatmapFormat::Svg;
  std::string title;
};

/// Row-major grid; value is absent for missing cells, which render neutral.
struct Heatmap {
  std::vector<int> rows;
  std::vector<int> cols;
  std::vector<std::optional<double>> values;
  std::vector<HeatClass> classes;

  std::optional<double> value(std::size_t r, std::size_t c) const { return values[r * cols.size() + c]; }
  HeatClass cell_class(std::size_t r, std::size_t c) const { return classes[r * cols.size() + c]; }
};

/// Metric matrices need ThresholdClasses and KS matrices SignificanceBinary;
/// anything else is IncompatibleSpec.
Heatmap build_heatmap(const EvalMatrix& matrix, const HeatmapSpec& spec);
Heatmap build_heatmap(const KSMatrix& ks, const HeatmapSpec& spec);

std::string render_svg(const Heatmap& heatmap, const HeatmapSpec& spec);
/// Columns row,col,value,class; missing cells leave value empty.
std::string render_csv(const Heatmap& heatmap);
Heatmap read_heatmap_csv(std::istream& in);

/// Builds and writes in spec.format. Throws IoFailure when the file cannot
/// be written.
void emit_heatmap(const EvalMatrix& matrix, const HeatmapSpec& spec, const std::filesystem::path& path);
void emit_heatmap(const KSMatrix& ks, const HeatmapSpec& spec, const std::filesystem::path& path);

/// Simple bar chart of per-train-year averages.
std::string render_bar_svg(const std::map<int, double>& averages, const std::string& title = {});

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace permdrift
