#include "memprobe/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

#include "memprobe/error.hpp"

namespace memprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

void require_cells(std::span<const CellResult> cells) {
  if (cells.empty()) throw Error(ErrorCode::EmptyInput, "no results found");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string verdict_text(const CellResult& c) {
  return c.diagnosis ? std::string(to_string(c.diagnosis->verdict)) : "n/a";
}

// Two decimals are plenty for pixel coordinates.
std::string px(double v) { return fmt::format("{:.2f}", v); }

}  // namespace

std::string format_number(double value) { return fmt::format("{:.6g}", value); }

std::string results_csv_text(std::span<const CellResult> cells) {
  require_cells(cells);
  std::string out = kResultsCsvHeader;
  out += '\n';
  for (const auto& c : cells) {
    const NullSummary s = summarize(c.null.scores);
    const double p = empirical_p_value(c.null.scores, c.null.observed);
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(c.run),
                       c.epoch, format_number(c.fraction), c.null.B,
                       format_number(c.null.observed), format_number(c.null.baseline),
                       format_number(s.min), format_number(s.q25), format_number(s.median),
                       format_number(s.q75), format_number(s.max), format_number(p),
                       verdict_text(c), format_number(c.validation_accuracy),
                       format_number(c.dnn_train_accuracy), c.cell_seed);
  }
  return out;
}

void write_results_csv(std::span<const CellResult> cells, const fs::path& path) {
  write_file(path, results_csv_text(cells));
}

std::string summary_json_text(std::span<const CellResult> cells) {
  require_cells(cells);
  json rows = json::array();
  for (const auto& c : cells) {
    const NullSummary s = summarize(c.null.scores);
    json row{{"run", c.run},
             {"epoch", c.epoch},
             {"fraction", c.fraction},
             {"B", c.null.B},
             {"observed", c.null.observed},
             {"baseline", c.null.baseline},
             {"null_min", s.min},
             {"null_q25", s.q25},
             {"null_median", s.median},
             {"null_q75", s.q75},
             {"null_max", s.max},
             {"null_mean", s.mean},
             {"p_value", empirical_p_value(c.null.scores, c.null.observed)},
             {"verdict", verdict_text(c)},
             {"validation_acc", c.validation_accuracy},
             {"dnn_train_acc", c.dnn_train_accuracy},
             {"seed", std::to_string(c.cell_seed)},
             {"null_scores", c.null.scores}};
    if (c.diagnosis) {
      row["diagnosis"] = {{"memorized", c.diagnosis->memorized},
                          {"learned", c.diagnosis->learned},
                          {"memorization_evidence", c.diagnosis->memorization_evidence},
                          {"learning_evidence", c.diagnosis->learning_evidence},
                          {"delta_mem", c.diagnosis->thresholds.delta_mem},
                          {"alpha", c.diagnosis->thresholds.alpha}};
    } else {
      row["diagnosis"] = nullptr;
    }
    rows.push_back(std::move(row));
  }
  return json{{"rows", rows}}.dump(2) + "\n";
}

void write_summary_json(std::span<const CellResult> cells, const fs::path& path) {
  write_file(path, summary_json_text(cells));
}

std::string fraction_color(double fraction) {
  static const std::map<double, std::string> known = {
      {0.01, "#08306b"}, {0.05, "#2166ac"}, {0.10, "#17becf"}, {1.00, "#8c8c8c"}};
  for (const auto& [f, color] : known) {
    if (std::abs(f - fraction) < 1e-9) return color;
  }
  // Elsewhere: blend from navy (fraction 0) to light grey (fraction 1).
  const double t = std::clamp(std::sqrt(fraction), 0.0, 1.0);
  const auto mix = [t](int a, int b) { return static_cast<int>(std::lround(a + t * (b - a))); };
  return fmt::format("#{:02x}{:02x}{:02x}", mix(0x08, 0xbd), mix(0x30, 0xbd), mix(0x6b, 0xbd));
}

std::string panel_svg_text(std::span<const CellResult> cells, const std::string& title) {
  require_cells(cells);
  constexpr double W = 760, H = 440, left = 60, right = 150, top = 36, bottom = 52;
  const double plot_w = W - left - right;
  const double plot_h = H - top - bottom;

  std::set<std::int64_t> epoch_set;
  std::set<double> fraction_set;
  for (const auto& c : cells) {
    epoch_set.insert(c.epoch);
    fraction_set.insert(c.fraction);
  }
  const std::vector<std::int64_t> epochs(epoch_set.begin(), epoch_set.end());
  const std::vector<double> fractions(fraction_set.begin(), fraction_set.end());

  double lo = std::log10(static_cast<double>(std::max<std::int64_t>(epochs.front(), 1)));
  double hi = std::log10(static_cast<double>(std::max<std::int64_t>(epochs.back(), 1)));
  lo = std::floor(lo);
  hi = std::max(std::ceil(hi), lo + 1.0);
  const auto x_of = [&](double epoch) {
    return left + (std::log10(std::max(epoch, 1.0)) - lo) / (hi - lo) * plot_w;
  };
  const auto y_of = [&](double acc) { return top + (1.0 - acc) * plot_h; };

  double spacing = plot_w;
  for (std::size_t i = 1; i < epochs.size(); ++i) {
    spacing = std::min(spacing, x_of(static_cast<double>(epochs[i])) -
                                    x_of(static_cast<double>(epochs[i - 1])));
  }
  const double slot = std::min(12.0, spacing / (static_cast<double>(fractions.size()) + 1.0));
  const double box_w = std::max(1.0, slot * 0.8);

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"11\">\n",
      W, H, W, H);
  s += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
  if (!title.empty()) {
    s += fmt::format("<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
                     px(left + plot_w / 2), xml_escape(title));
  }

  // Axes, grid and ticks.
  s += "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\"/>\n", px(left),
                   px(top + plot_h), px(left + plot_w));
  s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\"/>\n", px(left), px(top),
                   px(top + plot_h));
  s += "</g>\n<g class=\"ticks\">\n";
  for (int d = static_cast<int>(lo); d <= static_cast<int>(hi); ++d) {
    const double x = x_of(std::pow(10.0, d));
    s += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n"
        "<text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">1e{4}</text>\n",
        px(x), px(top + plot_h), px(top + plot_h + 5), px(top + plot_h + 18), d);
  }
  for (int i = 0; i <= 5; ++i) {
    const double acc = i / 5.0;
    const double y = y_of(acc);
    s += fmt::format(
        "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"#e0e0e0\"/>\n"
        "<text x=\"{3}\" y=\"{4}\" text-anchor=\"end\">{5:.1f}</text>\n",
        px(left), px(left + plot_w), px(y), px(left - 6), px(y + 4), acc);
  }
  s += "</g>\n";
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">epochs</text>\n",
                   px(left + plot_w / 2), px(H - 12));
  s += fmt::format(
      "<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">"
      "accuracy</text>\n",
      px(top + plot_h / 2));

  // Baseline reference.
  const double baseline = cells.front().null.baseline;
  s += fmt::format(
      "<line class=\"baseline\" x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"black\" "
      "stroke-dasharray=\"4 3\"/>\n",
      px(left), px(left + plot_w), px(y_of(baseline)));

  // Boxes.
  std::map<double, std::size_t> fraction_rank;
  for (std::size_t i = 0; i < fractions.size(); ++i) fraction_rank[fractions[i]] = i;
  const double center = (static_cast<double>(fractions.size()) - 1.0) / 2.0;
  for (const auto& c : cells) {
    const NullSummary q = summarize(c.null.scores);
    const double x = x_of(static_cast<double>(c.epoch)) +
                     (static_cast<double>(fraction_rank[c.fraction]) - center) * slot;
    const std::string color = fraction_color(c.fraction);
    s += fmt::format("<g class=\"box\" data-epoch=\"{}\" data-fraction=\"{}\" stroke=\"{}\">\n",
                     c.epoch, format_number(c.fraction), color);
    s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\"/>\n", px(x),
                     px(y_of(q.max)), px(y_of(q.min)));
    s += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" fill-opacity=\"0.35\"/>\n",
        px(x - box_w / 2), px(y_of(q.q75)), px(box_w), px(y_of(q.q25) - y_of(q.q75)), color);
    s += fmt::format("<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke-width=\"1.5\"/>\n",
                     px(x - box_w / 2), px(x + box_w / 2), px(y_of(q.median)));
    s += "</g>\n";
  }

  // Observed curves, one per fraction, then validation.
  std::map<double, std::map<std::int64_t, double>> observed;
  std::map<std::int64_t, double> validation;
  for (const auto& c : cells) {
    observed[c.fraction][c.epoch] = c.null.observed;
    validation[c.epoch] = c.validation_accuracy;
  }
  const auto polyline = [&](const std::map<std::int64_t, double>& pts, const std::string& color,
                            const std::string& cls) {
    std::string points;
    for (const auto& [e, v] : pts) {
      if (!points.empty()) points += ' ';
      points += px(x_of(static_cast<double>(e))) + "," + px(y_of(v));
    }
    return fmt::format(
        "<polyline class=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
        cls, points, color);
  };
  for (const auto& [f, pts] : observed) s += polyline(pts, fraction_color(f), "observed");
  s += polyline(validation, "#d62728", "validation");

  // Legend (swatches only, no polylines).
  double ly = top + 8;
  const double lx = left + plot_w + 16;
  s += "<g class=\"legend\">\n";
  for (double f : fractions) {
    s += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"10\" fill=\"{}\"/>\n"
        "<text x=\"{}\" y=\"{}\">s-val {:.0f}%</text>\n",
        px(lx), px(ly), fraction_color(f), px(lx + 20), px(ly + 9), f * 100.0);
    ly += 18;
  }
  s += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"10\" fill=\"#d62728\"/>\n"
      "<text x=\"{}\" y=\"{}\">validation</text>\n",
      px(lx), px(ly), px(lx + 20), px(ly + 9));
  ly += 18;
  s += fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\" "
      "stroke-dasharray=\"4 3\"/>\n<text x=\"{3}\" y=\"{4}\">baseline</text>\n",
      px(lx), px(ly + 5), px(lx + 14), px(lx + 20), px(ly + 9));
  s += "</g>\n</svg>\n";
  return s;
}

void render_panel_svg(std::span<const CellResult> cells, const fs::path& path,
                      const std::string& title) {
  write_file(path, panel_svg_text(cells, title));
}

std::vector<CellResult> write_report(const fs::path& output_dir) {
  const StorePaths store{output_dir};
  if (!fs::exists(store.manifest())) throw Error(ErrorCode::EmptyInput, "no results found");
  auto cells = load_cells(output_dir);
  require_cells(cells);
  write_results_csv(cells, store.results_csv());
  write_summary_json(cells, store.summary_json());
  render_panel_svg(cells, store.panel_svg(), cells.front().run);
  return cells;
}

}  // namespace memprobe
