#include <json.hpp>

#include <fstream>
#include <sstream>

#include "common.hpp"
#include "epical/chain_io.hpp"
#include "epical/errors.hpp"

namespace epical::cli {

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingArtifact("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Explicit directories must exist; defaults are optional sections.
std::optional<fs::path> section_file(const fs::path& given, const fs::path& fallback, const char* name) {
    if (!given.empty()) {
        require_file(given / name);
        return given / name;
    }
    if (fs::is_regular_file(fallback / name)) return fallback / name;
    return std::nullopt;
}

// Per-draw average of beta_t / gamma_t over the training days.
std::vector<double> overall_r0(const ChainSamples& chain) {
    std::vector<double> out;
    out.reserve(chain.size());
    for (const Draw& d : chain.draws) {
        double sum = 0.0;
        for (std::size_t t = 0; t < d.path.size(); ++t) sum += d.path.beta[t] / d.path.gamma[t];
        out.push_back(sum / static_cast<double>(d.path.size()));
    }
    return out;
}

nlohmann::json summary_json(const Summary& s) {
    return {{"mean", s.mean}, {"median", s.median}, {"lo", s.lo}, {"hi", s.hi}, {"level", s.level}};
}

}  // namespace

CLI::App* add_report(CLI::App& app, ReportOptions& opt) {
    CLI::App* sub = app.add_subcommand("report", "Merge fit, forecast and sensitivity outputs into one summary");
    sub->add_option("--fit-dir", opt.fit_dir, "Directory written by 'fit'")->required();
    sub->add_option("--forecast-dir", opt.forecast_dir, "Directory holding forecast.csv (default: the fit directory)");
    sub->add_option("--sensitivity-dir", opt.sensitivity_dir,
                    "Directory written by 'sensitivity' (default: <fit-dir>/sensitivity)");
    sub->add_option("--out", opt.out, "Output directory (default: the fit directory)");
    sub->add_option("--level", opt.level, "Credible level of the overall R0 interval")->capture_default_str();
    return sub;
}

void run_report(const ReportOptions& opt, std::ostream& log) {
    const FitArtifacts fit = load_fit(opt.fit_dir);
    const std::vector<double> r0 = overall_r0(fit.chain);
    const Summary r0_summary = summarize(r0, opt.level);

    const auto forecast = section_file(opt.forecast_dir, opt.fit_dir, kForecastFile);
    const auto indices = section_file(opt.sensitivity_dir, opt.fit_dir / "sensitivity", kIndexSummaryFile);
    const fs::path fit_summary = opt.fit_dir / kFitSummaryFile;

    std::ostringstream text;
    text << "city: " << fit.train.city << '\n'
         << "training days: " << fit.train.size() << " (" << day_label(fit.train.iso_dates, fit.train.day_numbers.front())
         << " to " << day_label(fit.train.iso_dates, fit.train.day_numbers.back()) << ")\n"
         << "covariates: ";
    for (std::size_t j = 0; j < fit.train.factor_names.size(); ++j) text << (j ? ", " : "") << fit.train.factor_names[j];
    text << "\nposterior draws: " << fit.chain.size() << "\n\n";
    text << "overall R0 (mean of beta/gamma over training days)\n"
         << "  mean " << format_real(r0_summary.mean) << ", median " << format_real(r0_summary.median) << ", "
         << opt.level * 100.0 << "% interval [" << format_real(r0_summary.lo) << ", " << format_real(r0_summary.hi)
         << "]\n";
    if (fs::is_regular_file(fit_summary)) text << "\n[fit]\n" << read_text(fit_summary);
    if (forecast) text << "\n[forecast]\n" << read_text(*forecast);
    if (indices) text << "\n[sensitivity indices]\n" << read_text(*indices);

    const fs::path out = opt.out.empty() ? opt.fit_dir : opt.out;
    {
        std::ofstream os = open_output(out / kReportFile);
        os << text.str();
        if (!os) throw IoError("write failed: " + (out / kReportFile).string());
    }

    nlohmann::json index;
    index["city"] = fit.train.city;
    index["training_days"] = fit.train.size();
    index["draws"] = fit.chain.size();
    index["covariates"] = fit.train.factor_names;
    index["overall_r0"] = summary_json(r0_summary);
    nlohmann::json files;
    files["chain"] = (opt.fit_dir / kChainFile).string();
    files["fitted"] = (opt.fit_dir / kFittedFile).string();
    if (forecast) files["forecast"] = forecast->string();
    if (indices) files["sensitivity_indices"] = indices->string();
    files["report"] = (out / kReportFile).string();
    index["files"] = files;
    {
        std::ofstream os = open_output(out / kReportIndexFile);
        os << index.dump(2) << '\n';
        if (!os) throw IoError("write failed: " + (out / kReportIndexFile).string());
    }
    log << "report written to " << (out / kReportFile).string() << '\n';
}

}  // namespace epical::cli
