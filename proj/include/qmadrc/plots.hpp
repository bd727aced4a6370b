#pragma once

// gnuplot script generation for the standard figure set, driven by the
// trace CSV header.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace qmadrc {

struct PlotSeries {
    std::string column;
    std::string title;
    double scale = 1.0;  ///< applied to the column before plotting
};

struct PlotSpec {
    std::string name;  ///< script/image basename
    std::string title;
    std::string ylabel;
    std::vector<PlotSeries> series;
};

/// One script per figure: open-loop altitude, then true/estimated output,
/// estimated total disturbance and control input for each channel.
inline std::vector<PlotSpec> figure_specs() {
    constexpr double r2d = 57.29577951308232;
    std::vector<PlotSpec> specs;
    specs.push_back({"fig05_altitude_ground_effect", "Altitude without controller", "altitude (m)", {{"altitude", "altitude"}}});

    struct Channel {
        const char* fig_out;
        const char* fig_dist;
        const char* fig_u;
        const char* key;
        const char* label;
        const char* truth;
        const char* estimate;
        double scale;
        const char* unit;
    };
    const Channel channels[] = {
        {"fig06", "fig07", "fig08", "alt", "Altitude", "altitude", "altitude_hat", 1.0, "m"},
        {"fig09", "fig10", "fig11", "roll", "Roll", "phi", "x1hat_roll", r2d, "deg"},
        {"fig12", "fig13", "fig14", "pitch", "Pitch", "theta", "x1hat_pitch", r2d, "deg"},
        {"fig15", "fig16", "fig17", "yaw", "Yaw", "psi", "x1hat_yaw", r2d, "deg"},
    };
    for (const auto& c : channels) {
        const std::string key = c.key, label = c.label;
        specs.push_back({std::string(c.fig_out) + "_" + key + "_true_estimated", "True and estimated " + label,
                         label + " (" + c.unit + ")",
                         {{c.truth, "true", c.scale}, {c.estimate, "estimated", c.scale}}});
        specs.push_back({std::string(c.fig_dist) + "_" + key + "_total_disturbance",
                         "Estimated total disturbance, " + label, "F_hat", {{"fhat_" + key, "F_hat"}}});
        specs.push_back({std::string(c.fig_u) + "_" + key + "_control_input", label + " control input", "u",
                         {{"u_" + key, "u"}}});
    }
    std::sort(specs.begin(), specs.end(), [](const PlotSpec& a, const PlotSpec& b) { return a.name < b.name; });
    return specs;
}

/// Reads the header of a trace CSV; throws InvalidInput for an empty trace.
inline std::vector<std::string> read_trace_header(const std::filesystem::path& csv, std::size_t* data_rows = nullptr) {
    std::ifstream in(csv);
    if (!in) throw InvalidInput("cannot read trace '" + csv.string() + "'");
    std::string header;
    if (!std::getline(in, header) || header.empty()) throw InvalidInput("trace '" + csv.string() + "' is empty");
    std::vector<std::string> cols;
    std::stringstream ss(header);
    for (std::string c; std::getline(ss, c, ',');) {
        if (!c.empty() && c.back() == '\r') c.pop_back();
        cols.push_back(c);
    }
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++rows;
    if (rows == 0) throw InvalidInput("trace '" + csv.string() + "' has no data rows");
    if (data_rows) *data_rows = rows;
    return cols;
}

inline std::string plot_script(const PlotSpec& spec, const std::string& csv) {
    std::ostringstream os;
    os << "# " << spec.title << "\n"
       << "set datafile separator ','\n"
       << "set terminal pngcairo size 900,540\n"
       << "set output '" << spec.name << ".png'\n"
       << "set title '" << spec.title << "'\n"
       << "set xlabel 'time (s)'\n"
       << "set ylabel '" << spec.ylabel << "'\n"
       << "set grid\n"
       << "datafile = '" << csv << "'\n"
       << "plot ";
    for (std::size_t i = 0; i < spec.series.size(); ++i) {
        const auto& s = spec.series[i];
        if (i) os << ", \\\n     ";
        os << "datafile using (column('time')):(" << s.scale << "*column('" << s.column << "')) with lines title '"
           << s.title << "'";
    }
    os << "\n";
    return os.str();
}

/// Writes one script per figure into out_dir and returns their paths.
/// Throws InvalidInput naming every column the trace lacks.
inline std::vector<std::filesystem::path> write_plot_scripts(const std::filesystem::path& csv,
                                                             const std::filesystem::path& out_dir) {
    const auto cols = read_trace_header(csv);
    const auto specs = figure_specs();

    std::vector<std::string> missing;
    for (const auto& spec : specs)
        for (const auto& s : spec.series)
            if (std::find(cols.begin(), cols.end(), s.column) == cols.end() &&
                std::find(missing.begin(), missing.end(), s.column) == missing.end())
                missing.push_back(s.column);
    if (!missing.empty()) {
        std::string msg = "trace is missing columns:";
        for (const auto& m : missing) msg += " " + m;
        throw InvalidInput(msg);
    }

    std::filesystem::create_directories(out_dir);
    const std::string csv_ref = std::filesystem::absolute(csv).string();
    std::vector<std::filesystem::path> written;
    for (const auto& spec : specs) {
        const auto path = out_dir / (spec.name + ".gp");
        std::ofstream out(path);
        if (!out) throw Error("cannot write '" + path.string() + "'");
        out << plot_script(spec, csv_ref);
        written.push_back(path);
    }
    return written;
}

}  // namespace qmadrc
