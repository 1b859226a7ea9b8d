#include "fairalloc/ingest.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>

namespace fairalloc {

namespace {

std::string loc(std::size_t row, std::size_t col) {
    return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

bool is_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    const int month = (s[5] - '0') * 10 + (s[6] - '0');
    const int day = (s[8] - '0') * 10 + (s[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace

ReturnPanel load_returns_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);

    ReturnPanel panel;
    std::string line;
    std::size_t file_row = 0;
    while (std::getline(in, line)) {
        ++file_row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (in.peek() == std::ifstream::traits_type::eof()) break;
            throw ParseError(path + ": blank line at row " + std::to_string(file_row));
        }
        const std::vector<std::string> fields = split_line(line);

        if (file_row == 1) {
            if (fields.size() < 2 || fields[0] != "date")
                throw ParseError(path + ": header must be date,<ticker_1>,... at " +
                                 loc(1, 1));
            panel.tickers.assign(fields.begin() + 1, fields.end());
            continue;
        }

        if (fields.size() != panel.tickers.size() + 1)
            throw ParseError(path + ": expected " + std::to_string(panel.tickers.size() + 1) +
                             " fields at " + loc(file_row, fields.size()));
        if (!is_iso_date(fields[0]))
            throw ParseError(path + ": malformed date '" + fields[0] + "' at " +
                             loc(file_row, 1));
        if (!panel.dates.empty() && !(panel.dates.back() < fields[0]))
            throw NonMonotoneDates(path + ": dates must be strictly increasing at " +
                                   loc(file_row, 1));
        panel.dates.push_back(fields[0]);

        for (std::size_t c = 1; c < fields.size(); ++c) {
            const std::string& cell = fields[c];
            if (cell.empty())
                throw MissingValue(path + ": empty cell at " + loc(file_row, c + 1));
            const char* begin = cell.c_str();
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end != begin + cell.size())
                throw ParseError(path + ": malformed number '" + cell + "' at " +
                                 loc(file_row, c + 1));
            if (!std::isfinite(v))
                throw ParseError(path + ": non-finite value at " + loc(file_row, c + 1));
            panel.returns.push_back(v);
        }
    }
    if (panel.tickers.empty()) throw ParseError(path + ": missing header row");
    if (panel.dates.empty()) throw ParseError(path + ": no data rows");
    return panel;
}

PnlSample build_portfolio(const ReturnPanel& panel, const PortfolioWeights& weights) {
    if (weights.w.size() != panel.cols())
        throw ShapeMismatch("build_portfolio: " + std::to_string(weights.w.size()) +
                            " weights for " + std::to_string(panel.cols()) + " tickers");
    bool any = false;
    for (double w : weights.w) any = any || w != 0.0;
    if (!any) throw InvalidArgument("build_portfolio: all weights are zero");

    PnlSample out;
    out.rows = panel.rows();
    out.cols = panel.cols();
    out.dates = panel.dates;
    out.values.resize(out.rows * out.cols);
    for (std::size_t r = 0; r < out.rows; ++r)
        for (std::size_t c = 0; c < out.cols; ++c)
            out.values[r * out.cols + c] = weights.w[c] * panel.at(r, c);
    out.validate();
    return out;
}

PnlSample to_pnl(const ReturnPanel& panel) {
    PortfolioWeights ones;
    ones.w.assign(panel.cols(), 1.0);
    return build_portfolio(panel, ones);
}

std::pair<ReturnPanel, ReturnPanel> split_panel(const ReturnPanel& panel,
                                                const std::string& boundary_date) {
    if (panel.rows() == 0) throw InvalidArgument("split_panel: empty panel");
    if (!is_iso_date(boundary_date))
        throw InvalidArgument("split_panel: malformed boundary date '" + boundary_date + "'");
    if (!(panel.dates.front() < boundary_date) || !(boundary_date <= panel.dates.back()))
        throw BoundaryOutOfRange("split_panel: boundary " + boundary_date +
                                 " must lie after " + panel.dates.front() +
                                 " and not after " + panel.dates.back());

    std::size_t cut = 0;
    while (cut < panel.rows() && panel.dates[cut] < boundary_date) ++cut;

    auto slice = [&](std::size_t first, std::size_t count) {
        ReturnPanel part;
        part.tickers = panel.tickers;
        part.dates.assign(panel.dates.begin() + first, panel.dates.begin() + first + count);
        part.returns.assign(panel.returns.begin() + first * panel.cols(),
                            panel.returns.begin() + (first + count) * panel.cols());
        return part;
    };
    return {slice(0, cut), slice(cut, panel.rows() - cut)};
}

}  // namespace fairalloc
