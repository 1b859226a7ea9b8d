#include "fairalloc/report_io.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

namespace fairalloc {

std::string format_sig12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

double round_sig12(double v) { return std::strtod(format_sig12(v).c_str(), nullptr); }

std::vector<std::string> synthetic_dates(std::size_t count) {
    using namespace std::chrono;
    std::vector<std::string> out;
    out.reserve(count);
    const sys_days start = sys_days(year{2000} / January / 1);
    for (std::size_t k = 0; k < count; ++k) {
        const year_month_day ymd(start + days(static_cast<long>(k)));
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                      unsigned(ymd.month()), unsigned(ymd.day()));
        out.emplace_back(buf);
    }
    return out;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    return out;
}

}  // namespace

void write_panel_csv(const std::string& path, const PnlSample& sample,
                     const std::vector<std::string>& names) {
    sample.validate();
    if (!names.empty() && names.size() != sample.cols)
        throw ShapeMismatch("write_panel_csv: " + std::to_string(names.size()) +
                            " names for " + std::to_string(sample.cols) + " columns");
    const std::vector<std::string>& dates =
        sample.dates.empty() ? synthetic_dates(sample.rows) : sample.dates;

    std::ofstream out = open_out(path);
    out << "date";
    for (std::size_t c = 0; c < sample.cols; ++c) {
        if (names.empty())
            out << ",X" << (c + 1);
        else
            out << ',' << names[c];
    }
    out << '\n';
    for (std::size_t r = 0; r < sample.rows; ++r) {
        out << dates[r];
        for (std::size_t c = 0; c < sample.cols; ++c)
            out << ',' << format_sig12(sample.at(r, c));
        out << '\n';
    }
    if (!out) throw Error("write failed for " + path);
}

void write_allocations_csv(const std::string& path, const std::vector<std::string>& dates,
                           const std::vector<AllocationVector>& allocs) {
    if (allocs.empty()) throw InvalidArgument("write_allocations_csv: no allocations");
    if (dates.size() != allocs.size())
        throw ShapeMismatch("write_allocations_csv: dates and allocations disagree");
    const std::size_t d = allocs.front().a.size();

    std::ofstream out = open_out(path);
    out << "date";
    for (std::size_t c = 0; c < d; ++c) out << ",a_" << (c + 1);
    out << ",total\n";
    for (std::size_t k = 0; k < allocs.size(); ++k) {
        if (allocs[k].a.size() != d)
            throw ShapeMismatch("write_allocations_csv: ragged allocation at row " +
                                std::to_string(k + 1));
        out << dates[k];
        for (double v : allocs[k].a) out << ',' << format_sig12(v);
        out << ',' << format_sig12(allocs[k].total()) << '\n';
    }
    if (!out) throw Error("write failed for " + path);
}

void write_curves_csv(const std::string& path, const FairnessReport& report) {
    const std::size_t d = report.g_margin_curves.size();
    std::ofstream out = open_out(path);
    out << "beta,g_total";
    for (std::size_t c = 0; c < d; ++c) out << ",g_" << (c + 1);
    out << '\n';
    for (std::size_t t = 0; t < report.grid.size(); ++t) {
        out << format_sig12(report.grid[t]) << ',' << format_sig12(report.g_curve[t]);
        for (std::size_t c = 0; c < d; ++c)
            out << ',' << format_sig12(report.g_margin_curves[c][t]);
        out << '\n';
    }
    if (!out) throw Error("write failed for " + path);
}

void write_report_json(const std::string& path, const FairnessReport& report,
                       const BacktestSeries& series, const std::optional<JarqueBera>& jb) {
    using json = nlohmann::ordered_json;
    auto num = [](double v) { return round_sig12(v); };
    auto arr = [&](const std::vector<double>& v) {
        json a = json::array();
        for (double x : v) a.push_back(round_sig12(x));
        return a;
    };

    json doc;
    doc["estimator"] = to_string(series.estimator_id);
    doc["alpha"] = num(report.alpha);
    doc["window"] = series.window;
    doc["days"] = series.m;
    doc["constituents"] = series.d;
    doc["grid_step"] = num(report.grid_step);
    doc["g_total_at_alpha"] = num(report.g_total_at_alpha);
    doc["g_margin_at_alpha"] = arr(report.g_margin_at_alpha);
    doc["upsilon"] = {{"value", num(report.upsilon.value)},
                      {"attained", report.upsilon.attained}};
    doc["upsilon_exact"] = {{"value", num(report.upsilon_exact.value)},
                            {"attained", report.upsilon_exact.attained}};
    doc["w_minus"] = arr(report.w_minus);
    doc["w_plus"] = arr(report.w_plus);
    doc["w"] = arr(report.w);
    doc["w_minus_exact"] = arr(report.w_minus_exact);
    doc["w_plus_exact"] = arr(report.w_plus_exact);
    doc["w_exact"] = arr(report.w_exact);
    if (jb.has_value()) {
        doc["jarque_bera"] = {{"statistic", num(jb->statistic)},
                              {"exceeds_1pct", jb->exceeds_1pct}};
    } else {
        doc["jarque_bera"] = nullptr;
    }
    doc["flags"] = report.flags;
    doc["grid"] = arr(report.grid);
    doc["g_curve"] = arr(report.g_curve);
    json margins = json::array();
    for (const auto& curve : report.g_margin_curves) margins.push_back(arr(curve));
    doc["g_margin_curves"] = std::move(margins);

    std::ofstream out = open_out(path);
    out << doc.dump(2) << '\n';
    if (!out) throw Error("write failed for " + path);
}

}  // namespace fairalloc
