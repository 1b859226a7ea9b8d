#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairalloc/backtest.hpp"
#include "fairalloc/bn.hpp"
#include "fairalloc/core.hpp"
#include "fairalloc/estimators.hpp"
#include "fairalloc/ingest.hpp"
#include "fairalloc/report_io.hpp"
#include "fairalloc/simulate.hpp"
#include "fairalloc/types.hpp"

namespace fa = fairalloc;

namespace {

std::string cache_path() {
    const char* env = std::getenv("FAIRALLOC_CACHE");
    return (env != nullptr && *env != '\0') ? env : "fairalloc_bn_cache.txt";
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw fa::ParseError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw fa::ParseError(path + ": " + e.what());
    }
}

std::vector<double> covariance_from_json(const nlohmann::json& doc, std::size_t d) {
    const auto& rows = doc.at("sigma");
    if (!rows.is_array() || rows.size() != d)
        throw fa::ParseError("params: sigma must be a " + std::to_string(d) + "x" +
                             std::to_string(d) + " array of arrays");
    std::vector<double> sigma;
    sigma.reserve(d * d);
    for (const auto& row : rows) {
        if (!row.is_array() || row.size() != d)
            throw fa::ParseError("params: sigma must be a " + std::to_string(d) + "x" +
                                 std::to_string(d) + " array of arrays");
        for (const auto& cell : row) sigma.push_back(cell.get<double>());
    }
    return sigma;
}

fa::GaussianModel gaussian_from_json(const std::string& path) {
    const nlohmann::json doc = load_json_file(path);
    fa::GaussianModel model;
    try {
        model.mu = doc.at("mu").get<std::vector<double>>();
        model.sigma = covariance_from_json(doc, model.mu.size());
    } catch (const fa::Error&) {
        throw;
    } catch (const std::exception& e) {
        throw fa::ParseError(path + ": " + e.what());
    }
    model.validate();
    return model;
}

fa::StudentTModel student_from_json(const std::string& path) {
    const nlohmann::json doc = load_json_file(path);
    fa::StudentTModel model;
    try {
        model.mu = doc.at("mu").get<std::vector<double>>();
        model.sigma = covariance_from_json(doc, model.mu.size());
        if (!doc.contains("nu"))
            throw fa::ParseError(path + ": student-t parameters require nu");
        model.nu = doc.at("nu").get<double>();
    } catch (const fa::Error&) {
        throw;
    } catch (const std::exception& e) {
        throw fa::ParseError(path + ": " + e.what());
    }
    model.validate();
    return model;
}

fa::PnlSample load_input(const std::string& path, const std::vector<double>& weights) {
    const fa::ReturnPanel panel = fa::load_returns_csv(path);
    if (weights.empty()) return fa::to_pnl(panel);
    fa::PortfolioWeights w;
    w.w = weights;
    return fa::build_portfolio(panel, w);
}

void check_reference_level(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw fa::InvalidArgument("alpha must lie in (0, 1), got " + std::to_string(alpha));
}

// Fills the estimator context, solving and caching b_n when the fair
// Gaussian estimator asks for it.
fa::EstimatorContext make_context(fa::EstimatorId id, std::size_t n, double alpha,
                                  const std::string& params_path,
                                  fa::GaussianModel& model_slot, std::uint64_t seed,
                                  unsigned threads) {
    fa::EstimatorContext ctx;
    if (id == fa::EstimatorId::GaussianFair) {
        fa::BnCache cache(cache_path());
        const fa::BnEntry entry =
            fa::resolve_bn(&cache, n, fa::RiskLevel(alpha), 10000000, 5e-4, seed, threads);
        ctx.has_bn = true;
        ctx.bn = entry.value;
    }
    if (id == fa::EstimatorId::GaussianTrue) {
        if (params_path.empty())
            throw fa::InvalidArgument("gaussian-true requires --params with the model");
        model_slot = gaussian_from_json(params_path);
        ctx.model = &model_slot;
    }
    return ctx;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairalloc: expected-shortfall capital allocation and backtesting"};
    app.require_subcommand(1);

    // allocate
    std::string al_input;
    std::string al_estimator;
    std::string al_output;
    std::string al_params;
    double al_alpha = 0.05;
    std::size_t al_window = 0;
    std::vector<double> al_weights;
    std::uint64_t al_seed = 42;
    unsigned al_threads = 1;
    auto* allocate = app.add_subcommand("allocate", "compute capital allocations from a panel");
    allocate->add_option("--input", al_input, "input CSV: date,<name_1>,...")->required();
    allocate
        ->add_option("--estimator", al_estimator,
                     "mean|gaussian-fair|gaussian-plugin|np-hat|np-check|gaussian-true")
        ->required();
    allocate->add_option("--alpha", al_alpha, "ES reference level in (0,1)")->required();
    allocate->add_option("--window", al_window,
                         "rolling window length (>= 2); whole sample when absent");
    allocate->add_option("--output", al_output, "allocation CSV: date,a_1..a_d,total")
        ->required();
    allocate->add_option("--weights", al_weights, "notional per column, comma separated")
        ->delimiter(',');
    allocate->add_option("--params", al_params, "model JSON, needed by gaussian-true");
    allocate->add_option("--seed", al_seed, "seed for cold-cache b_n solves");
    allocate->add_option("--threads", al_threads, "parallelism cap; results do not depend on it");

    // backtest
    std::string bt_input;
    std::string bt_estimator;
    std::string bt_report;
    std::string bt_curves;
    std::string bt_params;
    double bt_alpha = 0.05;
    double bt_grid = 1e-3;
    std::size_t bt_window = 0;
    std::vector<double> bt_weights;
    std::uint64_t bt_seed = 42;
    unsigned bt_threads = 1;
    auto* backtest = app.add_subcommand("backtest", "rolling backtest of an allocation estimator");
    backtest->add_option("--input", bt_input, "input CSV: date,<name_1>,...")->required();
    backtest
        ->add_option("--estimator", bt_estimator,
                     "mean|gaussian-fair|gaussian-plugin|np-hat|np-check|gaussian-true")
        ->required();
    backtest->add_option("--alpha", bt_alpha, "ES reference level in (0,1)")->required();
    backtest->add_option("--window", bt_window, "learning window length (>= 2)")->required();
    backtest->add_option("--grid", bt_grid, "level grid step (default 0.001)");
    backtest->add_option("--report", bt_report, "report JSON path")->required();
    backtest->add_option("--curves", bt_curves, "level curves CSV path")->required();
    backtest->add_option("--weights", bt_weights, "notional per column, comma separated")
        ->delimiter(',');
    backtest->add_option("--params", bt_params, "model JSON, needed by gaussian-true");
    backtest->add_option("--seed", bt_seed, "seed for cold-cache b_n solves");
    backtest->add_option("--threads", bt_threads, "parallelism cap; results do not depend on it");

    // simulate
    std::string sim_model;
    std::string sim_params;
    std::string sim_out;
    std::size_t sim_days = 0;
    std::uint64_t sim_seed = 42;
    unsigned sim_threads = 1;
    auto* simulate = app.add_subcommand("simulate", "draw a synthetic P&L panel");
    simulate->add_option("--model", sim_model, "gaussian|student-t")->required();
    simulate->add_option("--params", sim_params, "model JSON: mu, sigma [, nu]")->required();
    simulate->add_option("--days", sim_days, "number of rows")->required();
    simulate->add_option("--seed", sim_seed, "RNG seed");
    simulate->add_option("--out", sim_out, "output CSV path")->required();
    simulate->add_option("--threads", sim_threads, "parallelism cap; results do not depend on it");

    // bn
    std::size_t bn_n = 0;
    double bn_alpha = 0.05;
    double bn_samples = 1e7;
    double bn_tol = 5e-4;
    std::uint64_t bn_seed = 42;
    unsigned bn_threads = 1;
    auto* bn = app.add_subcommand("bn", "solve the unbiased Gaussian ES constant");
    bn->add_option("--n", bn_n, "sample size (>= 2)")->required();
    bn->add_option("--alpha", bn_alpha, "ES reference level in (0,1)")->required();
    bn->add_option("--samples", bn_samples, "Monte Carlo pairs (default 1e7)");
    bn->add_option("--tol", bn_tol, "absolute ES tolerance at the root (default 5e-4)");
    bn->add_option("--seed", bn_seed, "RNG seed");
    bn->add_option("--threads", bn_threads, "parallelism cap; results do not depend on it");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (app.got_subcommand(allocate)) {
            check_reference_level(al_alpha);
            const fa::EstimatorId id = fa::estimator_from_string(al_estimator);
            const fa::PnlSample pnl = load_input(al_input, al_weights);
            if (al_window == 1)
                throw fa::InvalidArgument("--window must be at least 2");
            const std::size_t n_eff = (al_window == 0) ? pnl.rows : al_window;
            fa::GaussianModel model;
            const fa::EstimatorContext ctx =
                make_context(id, n_eff, al_alpha, al_params, model, al_seed, al_threads);
            if (al_window == 0) {
                const fa::AllocationVector av =
                    fa::compute_allocation(id, pnl, fa::RiskLevel(al_alpha), ctx);
                fa::write_allocations_csv(al_output, {pnl.dates.back()}, {av});
            } else {
                const std::vector<fa::AllocationVector> allocs =
                    fa::rolling_allocations(pnl, id, fa::RiskLevel(al_alpha), al_window, ctx);
                const std::vector<std::string> eval_dates(pnl.dates.begin() + al_window,
                                                          pnl.dates.end());
                fa::write_allocations_csv(al_output, eval_dates, allocs);
            }
            std::cout << "wrote " << al_output << "\n";
            return 0;
        }

        if (app.got_subcommand(backtest)) {
            check_reference_level(bt_alpha);
            if (bt_window < 2) throw fa::InvalidArgument("--window must be at least 2");
            const fa::EstimatorId id = fa::estimator_from_string(bt_estimator);
            const fa::PnlSample pnl = load_input(bt_input, bt_weights);
            fa::GaussianModel model;
            const fa::EstimatorContext ctx =
                make_context(id, bt_window, bt_alpha, bt_params, model, bt_seed, bt_threads);
            const fa::BacktestSeries series =
                fa::run_backtest(pnl, id, fa::RiskLevel(bt_alpha), bt_window, ctx);
            const fa::FairnessReport report =
                fa::fairness_report(series, fa::RiskLevel(bt_alpha), bt_grid);
            std::optional<fa::JarqueBera> jb;
            if (series.m >= 8) jb = fa::jarque_bera(series.xi);
            fa::write_report_json(bt_report, report, series, jb);
            fa::write_curves_csv(bt_curves, report);
            std::cout << "days=" << series.m
                      << " g_total_at_alpha=" << fa::format_sig12(report.g_total_at_alpha)
                      << " upsilon=" << fa::format_sig12(report.upsilon.value) << "\n";
            return 0;
        }

        if (app.got_subcommand(simulate)) {
            fa::PnlSample panel;
            if (sim_model == "gaussian") {
                panel = fa::mvn_sample(gaussian_from_json(sim_params), sim_days, sim_seed,
                                       sim_threads);
            } else if (sim_model == "student-t") {
                panel = fa::mvt_sample(student_from_json(sim_params), sim_days, sim_seed,
                                       sim_threads);
            } else {
                throw fa::InvalidArgument("--model must be gaussian or student-t");
            }
            fa::write_panel_csv(sim_out, panel);
            std::cout << "wrote " << sim_out << "\n";
            return 0;
        }

        if (app.got_subcommand(bn)) {
            check_reference_level(bn_alpha);
            if (bn_samples < 1000.0 || bn_samples > 2e9)
                throw fa::InvalidArgument("--samples must lie in [1e3, 2e9]");
            fa::BnCache cache(cache_path());
            const fa::BnEntry entry = fa::resolve_bn(
                &cache, bn_n, fa::RiskLevel(bn_alpha),
                static_cast<std::size_t>(bn_samples), bn_tol, bn_seed, bn_threads);
            std::cout << entry.n << " " << fa::format_sig12(entry.alpha) << " "
                      << fa::format_sig12(entry.value) << " "
                      << fa::format_sig12(entry.precision) << " " << entry.method << "\n";
            return 0;
        }
    } catch (const fa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
