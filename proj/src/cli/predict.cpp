#include <fstream>

#include "common.hpp"
#include "epical/chain_io.hpp"
#include "epical/errors.hpp"

namespace epical::cli {

CLI::App* add_predict(CLI::App& app, PredictOptions& opt) {
    CLI::App* sub = app.add_subcommand("predict", "Posterior-predictive forecast for the days after the training window");
    sub->add_option("--fit-dir", opt.fit_dir, "Directory written by 'fit'")->required();
    sub->add_option("--future-covariates", opt.future,
                    "Covariate rows for the forecast days, in order: date|day,<factors...>[,count]")
        ->required();
    sub->add_option("--out", opt.out, "Output directory (default: the fit directory)");
    sub->add_option("--horizon", opt.horizon, "Forecast days")->capture_default_str();
    sub->add_option("--level", opt.level, "Credible level of the reported intervals")->capture_default_str();
    sub->add_flag("--draws", opt.draws, "Also write every predictive draw");
    sub->add_option("--seed", opt.seed, "Random seed")->capture_default_str();
    return sub;
}

void run_predict(const PredictOptions& opt, std::ostream& log) {
    if (opt.horizon < 1) throw HorizonMismatch("--horizon must be at least 1");
    const FitArtifacts fit = load_fit(opt.fit_dir);
    if (!fs::is_regular_file(opt.future)) {
        throw HorizonMismatch("future covariate file not found: " + opt.future.string() + " (need " +
                              std::to_string(opt.horizon) + " rows)");
    }
    const CovariateTable future = load_covariates(opt.future);
    if (future.size() < opt.horizon) {
        throw HorizonMismatch(opt.future.string() + " has " + std::to_string(future.size()) + " rows but the horizon is " +
                              std::to_string(opt.horizon));
    }
    if (future.names != fit.train.factor_names) {
        throw DimensionMismatch(opt.future.string() + ": covariate columns differ from the training data");
    }
    if (future.iso_dates != fit.train.iso_dates) throw ParseError(opt.future.string() + ": date format differs from training");

    const auto h = static_cast<Eigen::Index>(opt.horizon);
    const Eigen::MatrixXd x_future = fit.scaling.apply(future.x.topRows(h));
    Rng rng(opt.seed);
    const PredictiveDraws pred = predictive_samples(x_future, fit.chain, fit.x_scaled, fit.model, rng);

    Eigen::MatrixXd counts = pred.y.cast<double>();
    const std::vector<Summary> ys = summarize_columns(counts, opt.level);
    const std::vector<Summary> means = summarize_columns(pred.lambda, opt.level);
    const std::int64_t shift = std::stoll(fit.meta.at("shift-days"));

    const fs::path out_dir = opt.out.empty() ? opt.fit_dir : opt.out;
    std::ofstream os = open_output(out_dir / kForecastFile);
    os << (fit.train.iso_dates ? "date" : "day") << ",mean,median,lo,hi,lambda_mean";
    if (future.counts) os << ",observed";
    os << '\n';
    for (Eigen::Index t = 0; t < h; ++t) {
        const auto i = static_cast<std::size_t>(t);
        os << day_label(future.iso_dates, future.day_numbers[i] + shift) << ',' << format_real(ys[i].mean) << ','
           << format_real(ys[i].median) << ',' << format_real(ys[i].lo) << ',' << format_real(ys[i].hi) << ','
           << format_real(means[i].mean);
        if (future.counts) os << ',' << (*future.counts)[i];
        os << '\n';
    }
    if (!os) throw IoError("write failed: " + (out_dir / kForecastFile).string());

    if (opt.draws) {
        std::ofstream ds = open_output(out_dir / kForecastDrawsFile);
        ds << "draw";
        for (Eigen::Index t = 0; t < h; ++t) ds << ",y_" << (t + 1);
        for (Eigen::Index t = 0; t < h; ++t) ds << ",lambda_" << (t + 1);
        ds << '\n';
        for (Eigen::Index k = 0; k < pred.y.rows(); ++k) {
            ds << k;
            for (Eigen::Index t = 0; t < h; ++t) ds << ',' << pred.y(k, t);
            for (Eigen::Index t = 0; t < h; ++t) ds << ',' << format_real(pred.lambda(k, t));
            ds << '\n';
        }
    }
    log << "forecast of " << h << " days written to " << (out_dir / kForecastFile).string() << '\n';
}

}  // namespace epical::cli
