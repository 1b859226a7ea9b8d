#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include "fairalloc/backtest.hpp"
#include "fairalloc/bn.hpp"
#include "fairalloc/core.hpp"
#include "fairalloc/estimators.hpp"
#include "fairalloc/normal.hpp"
#include "fairalloc/simulate.hpp"
#include "fairalloc/types.hpp"

namespace py = pybind11;
namespace fa = fairalloc;

namespace {

using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const DArray& arr) {
    if (arr.ndim() != 1) throw fa::ShapeMismatch("expected a 1-d array");
    const auto* p = arr.data();
    return std::vector<double>(p, p + arr.shape(0));
}

fa::PnlSample to_sample(const DArray& arr) {
    if (arr.ndim() != 2) throw fa::ShapeMismatch("expected a 2-d array of P&L values");
    fa::PnlSample sample;
    sample.rows = static_cast<std::size_t>(arr.shape(0));
    sample.cols = static_cast<std::size_t>(arr.shape(1));
    const auto* p = arr.data();
    sample.values.assign(p, p + sample.rows * sample.cols);
    sample.validate();
    return sample;
}

fa::GaussianModel to_model(const DArray& mu, const DArray& sigma) {
    fa::GaussianModel model;
    model.mu = to_vector(mu);
    if (sigma.ndim() != 2) throw fa::ShapeMismatch("sigma must be a 2-d array");
    const std::size_t d = model.mu.size();
    if (static_cast<std::size_t>(sigma.shape(0)) != d ||
        static_cast<std::size_t>(sigma.shape(1)) != d)
        throw fa::ShapeMismatch("sigma must be d x d");
    const auto* p = sigma.data();
    model.sigma.assign(p, p + d * d);
    model.validate();
    return model;
}

py::array_t<double> from_vector(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<double> from_sample(const fa::PnlSample& sample) {
    py::array_t<double> arr({static_cast<py::ssize_t>(sample.rows),
                             static_cast<py::ssize_t>(sample.cols)});
    std::copy(sample.values.begin(), sample.values.end(), arr.mutable_data());
    return arr;
}

// bn and the true model enter through keyword arguments; the context only
// borrows the model, so the storage must outlive compute_allocation.
struct CtxStorage {
    fa::GaussianModel model;
    fa::EstimatorContext ctx;
};

CtxStorage make_ctx(fa::EstimatorId id, const std::optional<double>& bn,
                    const std::optional<DArray>& mu, const std::optional<DArray>& sigma) {
    CtxStorage s;
    if (bn.has_value()) {
        s.ctx.has_bn = true;
        s.ctx.bn = *bn;
    }
    if (id == fa::EstimatorId::GaussianTrue) {
        if (!mu.has_value() || !sigma.has_value())
            throw fa::InvalidArgument("gaussian-true requires mu and sigma");
        s.model = to_model(*mu, *sigma);
        s.ctx.model = &s.model;
    }
    return s;
}

py::dict report_to_dict(const fa::FairnessReport& report, const fa::BacktestSeries& series,
                        const std::optional<fa::JarqueBera>& jb) {
    py::dict d;
    d["estimator"] = fa::to_string(series.estimator_id);
    d["alpha"] = report.alpha;
    d["window"] = series.window;
    d["days"] = series.m;
    d["constituents"] = series.d;
    d["grid_step"] = report.grid_step;
    d["g_total_at_alpha"] = report.g_total_at_alpha;
    d["g_margin_at_alpha"] = from_vector(report.g_margin_at_alpha);
    py::dict ups;
    ups["value"] = report.upsilon.value;
    ups["attained"] = report.upsilon.attained;
    d["upsilon"] = ups;
    py::dict upse;
    upse["value"] = report.upsilon_exact.value;
    upse["attained"] = report.upsilon_exact.attained;
    d["upsilon_exact"] = upse;
    d["w_minus"] = from_vector(report.w_minus);
    d["w_plus"] = from_vector(report.w_plus);
    d["w"] = from_vector(report.w);
    d["w_minus_exact"] = from_vector(report.w_minus_exact);
    d["w_plus_exact"] = from_vector(report.w_plus_exact);
    d["w_exact"] = from_vector(report.w_exact);
    if (jb.has_value()) {
        py::dict j;
        j["statistic"] = jb->statistic;
        j["exceeds_1pct"] = jb->exceeds_1pct;
        d["jarque_bera"] = j;
    } else {
        d["jarque_bera"] = py::none();
    }
    d["flags"] = report.flags;
    d["grid"] = from_vector(report.grid);
    d["g_curve"] = from_vector(report.g_curve);
    py::list margins;
    for (const auto& curve : report.g_margin_curves) margins.append(from_vector(curve));
    d["g_margin_curves"] = margins;
    return d;
}

}  // namespace

PYBIND11_MODULE(_fairalloc, m) {
    m.doc() = "expected-shortfall capital allocation engine";

    py::register_exception<fa::Error>(m, "FairallocError");

    m.def("norm_ppf", &fa::norm_ppf, py::arg("p"));
    m.def("norm_cdf", &fa::norm_cdf, py::arg("x"));
    m.def(
        "es_factor", [](double alpha) { return fa::es_factor(alpha); }, py::arg("alpha"),
        "phi(Phi^{-1}(alpha)) / alpha, the standard Gaussian ES at level alpha");

    m.def(
        "empirical_var",
        [](const DArray& values, double alpha) {
            const std::vector<double> v = to_vector(values);
            return fa::empirical_var(v, fa::RiskLevel(alpha));
        },
        py::arg("values"), py::arg("alpha"));

    m.def(
        "empirical_es",
        [](const DArray& values, double alpha) {
            const std::vector<double> v = to_vector(values);
            return fa::empirical_es(v, fa::RiskLevel(alpha));
        },
        py::arg("values"), py::arg("alpha"));

    m.def(
        "allocate",
        [](const DArray& panel, const std::string& estimator, double alpha,
           std::optional<double> bn, std::optional<DArray> mu, std::optional<DArray> sigma) {
            const fa::EstimatorId id = fa::estimator_from_string(estimator);
            const fa::PnlSample sample = to_sample(panel);
            const CtxStorage s = make_ctx(id, bn, mu, sigma);
            const fa::AllocationVector av =
                fa::compute_allocation(id, sample, fa::RiskLevel(alpha), s.ctx);
            return from_vector(av.a);
        },
        py::arg("panel"), py::arg("estimator"), py::arg("alpha"), py::kw_only(),
        py::arg("bn") = std::nullopt, py::arg("mu") = std::nullopt,
        py::arg("sigma") = std::nullopt,
        "one capital allocation from the whole panel; returns the per-column array");

    m.def(
        "backtest",
        [](const DArray& panel, const std::string& estimator, double alpha, std::size_t window,
           double grid_step, std::optional<double> bn, std::optional<DArray> mu,
           std::optional<DArray> sigma) {
            const fa::EstimatorId id = fa::estimator_from_string(estimator);
            const fa::PnlSample sample = to_sample(panel);
            const CtxStorage s = make_ctx(id, bn, mu, sigma);
            const fa::BacktestSeries series =
                fa::run_backtest(sample, id, fa::RiskLevel(alpha), window, s.ctx);
            const fa::FairnessReport report =
                fa::fairness_report(series, fa::RiskLevel(alpha), grid_step);
            std::optional<fa::JarqueBera> jb;
            if (series.m >= 8) jb = fa::jarque_bera(series.xi);
            return report_to_dict(report, series, jb);
        },
        py::arg("panel"), py::arg("estimator"), py::arg("alpha"), py::arg("window"),
        py::kw_only(), py::arg("grid_step") = 1e-3, py::arg("bn") = std::nullopt,
        py::arg("mu") = std::nullopt, py::arg("sigma") = std::nullopt,
        "rolling backtest plus fairness report, returned as a dict");

    m.def(
        "gaussian_true_es",
        [](const DArray& mu, const DArray& sigma, double alpha) {
            return fa::gaussian_true_es(to_model(mu, sigma), fa::RiskLevel(alpha));
        },
        py::arg("mu"), py::arg("sigma"), py::arg("alpha"));

    m.def(
        "gaussian_true_allocation",
        [](const DArray& mu, const DArray& sigma, double alpha) {
            const fa::AllocationVector av =
                fa::gaussian_true_allocation(to_model(mu, sigma), fa::RiskLevel(alpha));
            return from_vector(av.a);
        },
        py::arg("mu"), py::arg("sigma"), py::arg("alpha"));

    m.def(
        "solve_bn",
        [](std::size_t n, double alpha, std::size_t samples, double tol, std::uint64_t seed,
           unsigned threads) {
            const fa::BnEntry e = fa::solve_bn(n, fa::RiskLevel(alpha), samples, tol, seed,
                                               threads);
            py::dict d;
            d["n"] = e.n;
            d["alpha"] = e.alpha;
            d["value"] = e.value;
            d["precision"] = e.precision;
            d["method"] = e.method;
            return d;
        },
        py::arg("n"), py::arg("alpha"), py::kw_only(), py::arg("samples") = 10000000,
        py::arg("tol") = 5e-4, py::arg("seed") = 42, py::arg("threads") = 1);

    m.def(
        "simulate_gaussian",
        [](const DArray& mu, const DArray& sigma, std::size_t days, std::uint64_t seed,
           unsigned threads) {
            return from_sample(fa::mvn_sample(to_model(mu, sigma), days, seed, threads));
        },
        py::arg("mu"), py::arg("sigma"), py::arg("days"), py::kw_only(), py::arg("seed") = 42,
        py::arg("threads") = 1);

    m.def(
        "simulate_student_t",
        [](const DArray& mu, const DArray& sigma, double nu, std::size_t days,
           std::uint64_t seed, unsigned threads) {
            const fa::GaussianModel g = to_model(mu, sigma);
            fa::StudentTModel model;
            model.mu = g.mu;
            model.sigma = g.sigma;
            model.nu = nu;
            return from_sample(fa::mvt_sample(model, days, seed, threads));
        },
        py::arg("mu"), py::arg("sigma"), py::arg("nu"), py::arg("days"), py::kw_only(),
        py::arg("seed") = 42, py::arg("threads") = 1);

    m.def(
        "verify_fairness",
        [](const std::string& estimator, const DArray& mu, const DArray& sigma, std::size_t n,
           double alpha, std::size_t replications, std::uint64_t seed, std::optional<double> bn,
           unsigned threads) {
            const fa::EstimatorId id = fa::estimator_from_string(estimator);
            const fa::GaussianModel model = to_model(mu, sigma);
            fa::EstimatorContext ctx;
            if (bn.has_value()) {
                ctx.has_bn = true;
                ctx.bn = *bn;
            }
            ctx.model = &model;
            const fa::VerifyResult r =
                fa::verify_fairness(id, model, n, fa::RiskLevel(alpha), replications, seed, ctx,
                                    threads);
            py::dict d;
            d["residual"] = from_vector(r.residual);
            d["se"] = from_vector(r.se);
            d["aggregate_residual"] = r.aggregate_residual;
            d["aggregate_se"] = r.aggregate_se;
            return d;
        },
        py::arg("estimator"), py::arg("mu"), py::arg("sigma"), py::arg("n"), py::arg("alpha"),
        py::arg("replications"), py::kw_only(), py::arg("seed") = 42,
        py::arg("bn") = std::nullopt, py::arg("threads") = 1,
        "Monte Carlo residuals of secured positions under the Gaussian model");
}
