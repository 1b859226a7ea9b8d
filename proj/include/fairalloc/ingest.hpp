#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fairalloc/types.hpp"

namespace fairalloc {

/// Daily return panel loaded from CSV: strictly increasing ISO dates,
/// one labeled column per ticker, no missing cells.
struct ReturnPanel {
    std::vector<std::string> dates;
    std::vector<std::string> tickers;
    std::vector<double> returns;  // row-major rows x cols

    std::size_t rows() const { return dates.size(); }
    std::size_t cols() const { return tickers.size(); }
    double at(std::size_t r, std::size_t c) const { return returns[r * cols() + c]; }
};

/// Fixed monetary notional per ticker; the sign encodes long or short.
struct PortfolioWeights {
    std::vector<double> w;
};

/// Parses `date,<ticker_1>,...,<ticker_d>` with ISO dates and numeric
/// cells. Errors carry 1-based row and column locations.
ReturnPanel load_returns_csv(const std::string& path);

/// P&L of fixed-notional positions: column i scaled by w_i. The notional
/// is held constant every day (no compounding).
PnlSample build_portfolio(const ReturnPanel& panel, const PortfolioWeights& weights);

/// Unit-weight shortcut: the panel values read as P&L directly.
PnlSample to_pnl(const ReturnPanel& panel);

/// Rows strictly before the boundary date versus the rest. The boundary
/// must cut both parts nonempty: first date < boundary <= last date.
std::pair<ReturnPanel, ReturnPanel> split_panel(const ReturnPanel& panel,
                                                const std::string& boundary_date);

}  // namespace fairalloc
