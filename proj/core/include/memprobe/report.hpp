#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "memprobe/experiment.hpp"

namespace memprobe {

/// Header of results.csv.
inline constexpr const char* kResultsCsvHeader =
    "run,epoch,fraction,B,observed,baseline,null_min,null_q25,null_median,null_q75,null_max,"
    "p_value,verdict,validation_acc,dnn_train_acc,seed";

/// Numbers as printf %.6g.
std::string format_number(double value);

/// Rows in the order given; verdict is "n/a" for cells without a diagnosis.
std::string results_csv_text(std::span<const CellResult> cells);
void write_results_csv(std::span<const CellResult> cells, const std::filesystem::path& path);

/// Full-precision mirror of the CSV plus every null score and diagnosis field.
std::string summary_json_text(std::span<const CellResult> cells);
void write_summary_json(std::span<const CellResult> cells, const std::filesystem::path& path);

/// Colour of a fraction's boxes and curve; smaller fractions are darker.
std::string fraction_color(double fraction);

/// Boxplot-plus-curves panel: log epoch axis, accuracy in [0, 1], one box per
/// cell, one observed polyline per fraction, a red validation polyline and a
/// dashed baseline.
std::string panel_svg_text(std::span<const CellResult> cells, const std::string& title = {});
void render_panel_svg(std::span<const CellResult> cells, const std::filesystem::path& path,
                      const std::string& title = {});

/// Writes results.csv, summary.json and panel.svg for a store. Throws
/// EmptyInput("no results found") when the store holds no cells.
std::vector<CellResult> write_report(const std::filesystem::path& output_dir);

}  // namespace memprobe
