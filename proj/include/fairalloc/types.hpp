#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairalloc {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error { using Error::Error; };
struct DegenerateVariance : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct InvalidN : Error { using Error::Error; };
struct CorruptCache : Error { using Error::Error; };
struct FactorizationFailure : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct MissingValue : Error { using Error::Error; };
struct NonMonotoneDates : Error { using Error::Error; };
struct BoundaryOutOfRange : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// VaR/ES reference level. Accepts (0, 1]; 1 is meaningful for the
/// backtest level grid (tail = whole sample).
class RiskLevel {
public:
    explicit RiskLevel(double alpha) : alpha_(alpha) {
        if (!(alpha > 0.0) || !(alpha <= 1.0))
            throw InvalidArgument("RiskLevel: alpha must lie in (0, 1], got " +
                                  std::to_string(alpha));
    }
    double value() const { return alpha_; }

private:
    double alpha_;
};

/// An n x d panel of P&L observations, row-major. Rows are days,
/// columns are portfolio constituents. Dates are optional labels.
struct PnlSample {
    std::vector<double> values;       // row-major, size rows*cols
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::string> dates;   // empty or size rows, strictly increasing

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    void validate() const;
};

/// Non-owning view over a contiguous block of panel rows.
struct PanelView {
    const double* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;

    PanelView() = default;
    PanelView(const double* d, std::size_t r, std::size_t c) : data(d), rows(r), cols(c) {}
    PanelView(const PnlSample& s) : data(s.values.data()), rows(s.rows), cols(s.cols) {}

    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data + r * cols; }
    /// View of rows [first, first+count).
    PanelView slice(std::size_t first, std::size_t count) const {
        return PanelView(data + first * cols, count, cols);
    }
};

/// Sample moments of a panel, 1/n normalization throughout.
struct PortfolioStats {
    std::vector<double> mu;   // per-constituent sample means
    double mu_s = 0.0;        // mean of the aggregate S
    double var_s = 0.0;       // variance of the aggregate, 1/n divisor
    std::vector<double> cov;  // Cov(X_i, S), 1/n divisor
};

enum class EstimatorId {
    Mean,
    GaussianFair,    // B-hat: regression coefficients + unbiased Gaussian ES
    GaussianPlugin,  // C-hat: sample moments in the closed form
    NpHat,           // D-hat: tail average, tail-count denominator
    NpCheck,         // D-check: tail average, n*alpha denominator
    GaussianTrue,    // closed form on known model parameters
    External,
};

std::string to_string(EstimatorId id);
EstimatorId estimator_from_string(const std::string& name);

/// Capital allocation per constituent, in monetary units.
struct AllocationVector {
    std::vector<double> a;
    EstimatorId estimator_id = EstimatorId::External;
    double alpha = 0.0;
    std::size_t window = 0;  // sample size n the allocation was computed from

    double total() const;
};

/// Mean vector and covariance matrix of a Gaussian P&L model.
struct GaussianModel {
    std::vector<double> mu;     // size d
    std::vector<double> sigma;  // row-major d x d, symmetric PSD

    std::size_t dim() const { return mu.size(); }
    double sigma_at(std::size_t i, std::size_t j) const { return sigma[i * dim() + j]; }
    /// Checks shape, symmetry and positive semidefiniteness
    /// (eigenvalues >= -1e-10 * max |eigenvalue|).
    void validate() const;
};

}  // namespace fairalloc
