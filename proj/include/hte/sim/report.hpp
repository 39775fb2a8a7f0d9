#pragma once
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hte/core/csv.hpp"
#include "hte/sim/benchmark.hpp"

namespace hte {

inline const char* kBenchmarkCsvHeader =
    "scenario,method,replication,stat,corr,jaccard,ate_hat,ate_true,bias,eta,failed,error";

namespace detail {

inline std::string metrics_row_csv(const MetricsRow& r) {
    auto opt = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string();
    };
    std::ostringstream os;
    os << r.scenario << ',' << r.method << ',' << r.replication << ',' << r.stat << ','
       << format_double(r.corr) << ',' << format_double(r.jaccard_index) << ','
       << opt(r.ate_hat) << ',' << opt(r.ate_true) << ',' << opt(r.bias) << ','
       << format_double(r.eta) << ',' << (r.failed ? 1 : 0) << ',' << r.error;
    return os.str();
}

} // namespace detail

// Results CSV: provenance comment, fixed header, one line per MetricsRow
// (replications first, aggregates after).
inline void write_benchmark_csv(const std::string& path, const BenchmarkResult& result,
                                const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    if (!provenance.empty()) out << "# " << provenance << "\n";
    out << kBenchmarkCsvHeader << "\n";
    for (const auto& r : result.rows) out << detail::metrics_row_csv(r) << "\n";
    for (const auto& r : result.aggregates) out << detail::metrics_row_csv(r) << "\n";
}

inline nlohmann::json benchmark_summary_json(const BenchmarkResult& result) {
    nlohmann::json aggregates = nlohmann::json::array();
    for (const auto& r : result.aggregates) {
        nlohmann::json j{{"scenario", r.scenario}, {"method", r.method},
                         {"stat", r.stat},         {"corr", r.corr},
                         {"jaccard", r.jaccard_index}, {"eta", r.eta}};
        if (r.ate_hat) j["ate_hat"] = *r.ate_hat;
        if (r.ate_true) j["ate_true"] = *r.ate_true;
        if (r.bias) j["bias"] = *r.bias;
        aggregates.push_back(j);
    }
    std::size_t failures = 0;
    for (const auto& r : result.rows) failures += r.failed ? 1 : 0;
    return nlohmann::json{{"config", result.config},
                          {"aggregates", aggregates},
                          {"failed_cells", failures}};
}

// Minimal scatter plot, one SVG per call. Points carry per-method colors;
// the dotted guide line is drawn when requested (the eta ceiling, or the
// 45-degree line of the calibration scatter).
struct ScatterSeries {
    std::string label;
    std::vector<double> x, y;
};

inline void write_scatter_svg(const std::string& path, const std::string& title,
                              const std::string& x_label, const std::string& y_label,
                              const std::vector<ScatterSeries>& series,
                              std::optional<double> hline = std::nullopt,
                              bool diagonal = false) {
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    const double w = 640, h = 480, ml = 60, mr = 150, mt = 40, mb = 50;
    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.y[i]);
            y_max = std::max(y_max, s.y[i]);
        }
    if (hline) {
        y_min = std::min(y_min, *hline);
        y_max = std::max(y_max, *hline);
    }
    if (!(x_min < x_max)) {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if (!(y_min < y_max)) {
        y_min -= 0.5;
        y_max += 0.5;
    }
    const double x_pad = 0.05 * (x_max - x_min), y_pad = 0.05 * (y_max - y_min);
    x_min -= x_pad;
    x_max += x_pad;
    y_min -= y_pad;
    y_max += y_pad;
    auto sx = [&](double v) { return ml + (v - x_min) / (x_max - x_min) * (w - ml - mr); };
    auto sy = [&](double v) { return h - mb - (v - y_min) / (y_max - y_min) * (h - mt - mb); };

    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
        << "</text>\n";
    out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='"
        << h - mb << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
        << "' stroke='black'/>\n";
    out << "<text x='" << (ml + w - mr) / 2 << "' y='" << h - 12
        << "' text-anchor='middle' font-size='12'>" << x_label << "</text>\n";
    out << "<text x='16' y='" << (mt + h - mb) / 2
        << "' text-anchor='middle' font-size='12' transform='rotate(-90 16 "
        << (mt + h - mb) / 2 << ")'>" << y_label << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x_min + (x_max - x_min) * k / 4.0;
        const double yv = y_min + (y_max - y_min) * k / 4.0;
        char buf[32];
        snprintf(buf, sizeof buf, "%.3g", xv);
        out << "<text x='" << sx(xv) << "' y='" << h - mb + 16
            << "' text-anchor='middle' font-size='10'>" << buf << "</text>\n";
        snprintf(buf, sizeof buf, "%.3g", yv);
        out << "<text x='" << ml - 6 << "' y='" << sy(yv) + 3
            << "' text-anchor='end' font-size='10'>" << buf << "</text>\n";
    }
    if (hline)
        out << "<line x1='" << ml << "' y1='" << sy(*hline) << "' x2='" << w - mr
            << "' y2='" << sy(*hline) << "' stroke='gray' stroke-dasharray='4 3'/>\n";
    if (diagonal) {
        const double lo = std::max(x_min, y_min), hi = std::min(x_max, y_max);
        if (lo < hi)
            out << "<line x1='" << sx(lo) << "' y1='" << sy(lo) << "' x2='" << sx(hi)
                << "' y2='" << sy(hi) << "' stroke='gray' stroke-dasharray='4 3'/>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = palette[s % 10];
        for (std::size_t i = 0; i < series[s].x.size(); ++i)
            out << "<circle cx='" << sx(series[s].x[i]) << "' cy='" << sy(series[s].y[i])
                << "' r='3.5' fill='" << color << "' fill-opacity='0.75'/>\n";
        out << "<circle cx='" << w - mr + 16 << "' cy='" << mt + 14 * s + 4
            << "' r='4' fill='" << color << "'/>\n";
        out << "<text x='" << w - mr + 26 << "' y='" << mt + 14 * s + 8
            << "' font-size='11'>" << series[s].label << "</text>\n";
    }
    out << "</svg>\n";
}

// The two benchmark figures: eta against corr (with the oracle ceiling), and
// estimated against true subgroup ATE (with the 45-degree line).
inline void write_benchmark_plots(const std::string& dir, const BenchmarkResult& result,
                                  double eta_ceiling = 0.22) {
    std::vector<std::string> scenarios, methods;
    for (const auto& r : result.rows) {
        if (r.failed) continue;
        if (std::find(scenarios.begin(), scenarios.end(), r.scenario) == scenarios.end())
            scenarios.push_back(r.scenario);
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
            methods.push_back(r.method);
    }
    for (const auto& scenario : scenarios) {
        std::vector<ScatterSeries> eta_series, ate_series;
        for (const auto& method : methods) {
            ScatterSeries e{method, {}, {}}, a{method, {}, {}};
            for (const auto& r : result.rows) {
                if (r.failed || r.scenario != scenario || r.method != method) continue;
                e.x.push_back(r.corr);
                e.y.push_back(r.eta);
                if (r.ate_hat && r.ate_true) {
                    a.x.push_back(*r.ate_true);
                    a.y.push_back(*r.ate_hat);
                }
            }
            if (!e.x.empty()) eta_series.push_back(std::move(e));
            if (!a.x.empty()) ate_series.push_back(std::move(a));
        }
        write_scatter_svg(dir + "/eta_vs_corr_" + scenario + ".svg",
                          "Utility index vs correlation, " + scenario,
                          "corr(estimated, true CATE)", "eta", eta_series, eta_ceiling,
                          false);
        write_scatter_svg(dir + "/ate_scatter_" + scenario + ".svg",
                          "Subgroup ATE, estimated vs true, " + scenario,
                          "true ATE in selected subgroup", "estimated ATE", ate_series,
                          std::nullopt, true);
    }
}

} // namespace hte
