// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tabular and SVG output for batch runs: plain TSV data tables plus a
// small static line-chart renderer, enough for speedup/accuracy curves
// and per-layer agreement plots.

#pragma once

#include <string>
#include <vector>

namespace lenred {

void write_tsv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

struct ChartSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<ChartSeries>& series);

std::string format_double(double v, int precision = 6);

}  // namespace lenred
