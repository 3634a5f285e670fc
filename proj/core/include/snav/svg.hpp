#ifndef SNAV_SVG_HPP
#define SNAV_SVG_HPP

#include <string>
#include <vector>

namespace snav::svg {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

struct ChartOptions {
    int width = 720, height = 480;
    std::string title, x_label, y_label;
};

/// Writes a static line chart (axes, ticks, legend) as a standalone SVG.
void write_line_chart(const std::vector<Series>& series, const ChartOptions& options,
                      const std::string& path);

/// Parses a CSV with a header row into named numeric columns. Non-numeric
/// cells become NaN.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;  // data[row][col]

    int column_index(const std::string& name) const;  // -1 when missing
    std::vector<double> column(const std::string& name) const;
    std::size_t rows() const { return data.size(); }
};

CsvTable read_csv(const std::string& path);

}  // namespace snav::svg

#endif
