#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fairalloc/backtest.hpp"
#include "fairalloc/types.hpp"

namespace fairalloc {

/// %.12g, the fixed precision of every file the engine writes.
std::string format_sig12(double v);

/// Rounds through the 12-significant-digit decimal form, so serialized
/// values re-read equal.
double round_sig12(double v);

/// Consecutive ISO dates starting at 2000-01-01, for samples without
/// their own labels.
std::vector<std::string> synthetic_dates(std::size_t count);

/// `date,<name_1>,...,<name_d>`; synthetic dates fill in when the sample
/// carries none. Pass empty names to get X1..Xd.
void write_panel_csv(const std::string& path, const PnlSample& sample,
                     const std::vector<std::string>& names = {});

/// `date,a_1,...,a_d,total`, one row per allocation.
void write_allocations_csv(const std::string& path, const std::vector<std::string>& dates,
                           const std::vector<AllocationVector>& allocs);

/// `beta,g_total,g_1,...,g_d`, one row per grid point.
void write_curves_csv(const std::string& path, const FairnessReport& report);

/// Structured report mirroring FairnessReport plus run metadata and the
/// normality diagnostic of the aggregated secured positions. The
/// diagnostic needs at least 8 days; pass nullopt below that and the
/// field is written as null.
void write_report_json(const std::string& path, const FairnessReport& report,
                       const BacktestSeries& series, const std::optional<JarqueBera>& jb);

}  // namespace fairalloc
