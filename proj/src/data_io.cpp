#include "epical/data_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "epical/chain_io.hpp"
#include "epical/errors.hpp"
#include "epical/mcmc.hpp"

namespace epical {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_row(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(table.header.size()) + " fields, found " + std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(line_no);
    }
    if (table.header.empty()) throw ParseError(path.string() + ": missing header row");
    return table;
}

double parse_double(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw ParseError(where + ": not a number: '" + s + "'");
    }
    return v;
}

std::int64_t parse_count(const std::string& s, const std::string& where) {
    const double v = parse_double(s, where);
    if (v != std::floor(v) || std::abs(v) > 9e15) throw ParseError(where + ": not an integer count: '" + s + "'");
    return static_cast<std::int64_t>(v);
}

bool is_iso_date(const std::string& s) { return s.size() == 10 && s[4] == '-' && s[7] == '-'; }

struct DateColumn {
    std::vector<std::string> labels;
    std::vector<std::int64_t> days;
    bool iso = false;
};

DateColumn parse_dates(const CsvTable& table, const std::filesystem::path& path) {
    DateColumn out;
    if (table.rows.empty()) throw ParseError(path.string() + ": no data rows");
    out.iso = is_iso_date(table.rows.front().front());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string& label = table.rows[r].front();
        const std::string where = path.string() + ":" + std::to_string(table.line_numbers[r]);
        if (out.iso != is_iso_date(label)) throw ParseError(where + ": mixed date formats");
        out.days.push_back(out.iso ? parse_iso_date(label) : parse_count(label, where));
        out.labels.push_back(label);
    }
    return out;
}

void require_consecutive(const std::vector<std::int64_t>& days, const std::vector<std::string>& labels,
                         const std::string& what) {
    for (std::size_t t = 1; t < days.size(); ++t) {
        if (days[t] != days[t - 1] + 1) {
            throw DateGapError(what + ": dates are not consecutive between " + labels[t - 1] + " and " + labels[t]);
        }
    }
}

bool is_date_column(const std::string& name) { return name == "date" || name == "day"; }

}  // namespace

void ObservationSeries::validate() const {
    const std::size_t n = y.size();
    if (dates.size() != n || day_numbers.size() != n || static_cast<std::size_t>(x.rows()) != n) {
        throw DimensionMismatch("series columns differ in length");
    }
    if (static_cast<Eigen::Index>(factor_names.size()) != x.cols()) {
        throw DimensionMismatch("factor names do not match covariate columns");
    }
    for (const auto v : y) {
        if (v < 0) throw ParseError("negative count in series");
    }
    if (!(population > 0.0)) throw NegativePopulation("population must be positive");
}

std::int64_t parse_iso_date(const std::string& text) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (!is_iso_date(text) || std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
        throw ParseError("not an ISO date: '" + text + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw ParseError("invalid calendar date: '" + text + "'");
    return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::string format_iso_date(std::int64_t days) {
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

std::vector<std::int64_t> daily_from_cumulative(std::span<const std::int64_t> cumulative, std::size_t* clamped) {
    std::vector<std::int64_t> out;
    out.reserve(cumulative.size());
    std::size_t negatives = 0;
    for (std::size_t t = 0; t < cumulative.size(); ++t) {
        std::int64_t v = t == 0 ? cumulative[0] : cumulative[t] - cumulative[t - 1];
        if (v < 0) {
            v = 0;
            ++negatives;
        }
        out.push_back(v);
    }
    if (clamped) *clamped = negatives;
    return out;
}

bool looks_cumulative(std::span<const std::int64_t> counts) {
    if (counts.size() < 3) return false;
    bool increased = false;
    for (std::size_t t = 1; t < counts.size(); ++t) {
        if (counts[t] < counts[t - 1]) return false;
        increased = increased || counts[t] > counts[t - 1];
    }
    return increased;
}

CovariateTable load_covariates(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    if (table.header.size() < 2 || !is_date_column(table.header.front())) {
        throw ParseError(path.string() + ": first column must be 'date' or 'day' followed by covariates");
    }
    const DateColumn dates = parse_dates(table, path);
    CovariateTable out;
    out.dates = dates.labels;
    out.day_numbers = dates.days;
    out.iso_dates = dates.iso;
    std::vector<std::size_t> factor_cols;
    std::optional<std::size_t> count_col;
    for (std::size_t c = 1; c < table.header.size(); ++c) {
        if (table.header[c] == "count") {
            count_col = c;
        } else {
            factor_cols.push_back(c);
            out.names.push_back(table.header[c]);
        }
    }
    if (factor_cols.empty()) throw ParseError(path.string() + ": no covariate columns");
    out.x.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(factor_cols.size()));
    if (count_col) out.counts.emplace();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string where = path.string() + ":" + std::to_string(table.line_numbers[r]);
        for (std::size_t c = 0; c < factor_cols.size(); ++c) {
            out.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_double(table.rows[r][factor_cols[c]], where);
        }
        if (count_col) out.counts->push_back(parse_count(table.rows[r][*count_col], where));
    }
    return out;
}

ObservationSeries load_series(const std::filesystem::path& cases, const std::filesystem::path& covariates,
                              double population, CountMode mode, LoadReport* report) {
    if (!(population > 0.0)) throw NegativePopulation("population must be positive, got " + std::to_string(population));
    const CsvTable case_table = read_csv(cases);
    if (case_table.header.size() != 2 || !is_date_column(case_table.header[0]) || case_table.header[1] != "count") {
        throw ParseError(cases.string() + ": expected header 'date,count'");
    }
    const DateColumn case_dates = parse_dates(case_table, cases);
    require_consecutive(case_dates.days, case_dates.labels, cases.string());
    std::vector<std::int64_t> raw;
    for (std::size_t r = 0; r < case_table.rows.size(); ++r) {
        raw.push_back(parse_count(case_table.rows[r][1], cases.string() + ":" + std::to_string(case_table.line_numbers[r])));
    }

    LoadReport info;
    info.cumulative = mode == CountMode::Cumulative || (mode == CountMode::Auto && looks_cumulative(raw));
    std::vector<std::int64_t> daily = raw;
    if (info.cumulative) {
        daily = daily_from_cumulative(raw, &info.clamped_negatives);
    } else {
        for (auto& v : daily) {
            if (v < 0) {
                v = 0;
                ++info.clamped_negatives;
            }
        }
    }
    if (report) *report = info;

    const CovariateTable cov = load_covariates(covariates);
    if (cov.iso_dates != case_dates.iso) throw ParseError("case and covariate files use different date formats");
    std::map<std::int64_t, std::size_t> row_of;
    for (std::size_t r = 0; r < cov.size(); ++r) row_of.emplace(cov.day_numbers[r], r);

    ObservationSeries out;
    out.iso_dates = case_dates.iso;
    out.population = population;
    out.factor_names = cov.names;
    out.x.resize(static_cast<Eigen::Index>(daily.size()), cov.x.cols());
    for (std::size_t t = 0; t < daily.size(); ++t) {
        const auto it = row_of.find(case_dates.days[t]);
        if (it == row_of.end()) {
            throw DateGapError(covariates.string() + ": no covariate row for " + case_dates.labels[t]);
        }
        out.x.row(static_cast<Eigen::Index>(t)) = cov.x.row(static_cast<Eigen::Index>(it->second));
        out.dates.push_back(case_dates.labels[t]);
        out.day_numbers.push_back(case_dates.days[t]);
        out.y.push_back(daily[t]);
    }
    out.city = cases.parent_path().filename().string();
    return out;
}

ObservationSeries load_combined(const std::filesystem::path& path, double population) {
    if (!(population > 0.0)) throw NegativePopulation("population must be positive, got " + std::to_string(population));
    CovariateTable table = load_covariates(path);
    if (!table.counts) throw ParseError(path.string() + ": missing 'count' column");
    require_consecutive(table.day_numbers, table.dates, path.string());
    ObservationSeries out;
    out.dates = std::move(table.dates);
    out.day_numbers = std::move(table.day_numbers);
    out.iso_dates = table.iso_dates;
    out.y = std::move(*table.counts);
    out.x = std::move(table.x);
    out.factor_names = std::move(table.names);
    out.population = population;
    out.city = path.stem().string();
    out.validate();
    return out;
}

void write_series(const std::filesystem::path& path, const ObservationSeries& series) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << (series.iso_dates ? "date" : "day");
    for (const auto& name : series.factor_names) os << ',' << name;
    os << ",count\n";
    for (std::size_t t = 0; t < series.size(); ++t) {
        os << series.dates[t];
        for (Eigen::Index j = 0; j < series.x.cols(); ++j) os << ',' << format_real(series.x(static_cast<Eigen::Index>(t), j));
        os << ',' << series.y[t] << '\n';
    }
    if (!os) throw IoError("write failed: " + path.string());
}

ObservationSeries slice(const ObservationSeries& series, std::size_t begin, std::size_t end) {
    if (begin > end || end > series.size()) throw DimensionMismatch("slice outside the series");
    ObservationSeries out;
    const auto b = static_cast<std::ptrdiff_t>(begin);
    const auto e = static_cast<std::ptrdiff_t>(end);
    out.dates.assign(series.dates.begin() + b, series.dates.begin() + e);
    out.day_numbers.assign(series.day_numbers.begin() + b, series.day_numbers.begin() + e);
    out.y.assign(series.y.begin() + b, series.y.begin() + e);
    out.x = series.x.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
    out.iso_dates = series.iso_dates;
    out.factor_names = series.factor_names;
    out.population = series.population;
    out.city = series.city;
    return out;
}

ObservationSeries apply_infectious_shift(const ObservationSeries& series, std::size_t k_days) {
    const std::size_t n = series.size();
    if (k_days >= n) {
        throw ShiftTooLarge("shift of " + std::to_string(k_days) + " days leaves no data in a " + std::to_string(n) +
                            "-day series");
    }
    // Covariates (and their dates) describe the infection day; counts come from k days later.
    ObservationSeries out = slice(series, 0, n - k_days);
    out.y.assign(series.y.begin() + static_cast<std::ptrdiff_t>(k_days), series.y.end());
    return out;
}

std::size_t split_point(const ObservationSeries& series, const std::string& last_label) {
    const std::int64_t cut = series.iso_dates ? parse_iso_date(last_label) : parse_count(last_label, "split date");
    std::size_t end = 0;
    while (end < series.size() && series.day_numbers[end] <= cut) ++end;
    if (end == 0 || end > series.size()) throw ConfigError("split date " + last_label + " lies outside the series");
    return end;
}

Eigen::MatrixXd Scaling::apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != lo.size()) throw DimensionMismatch("scaling dimension differs from covariates");
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = (x.col(j).array() - lo[j]) / (hi[j] - lo[j]);
    return out;
}

Eigen::MatrixXd Scaling::invert(const Eigen::MatrixXd& x) const {
    if (x.cols() != lo.size()) throw DimensionMismatch("scaling dimension differs from covariates");
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = lo[j] + x.col(j).array() * (hi[j] - lo[j]);
    return out;
}

Scaling fit_scaling(const Eigen::MatrixXd& x) {
    if (x.rows() < 2) throw ConstantColumn("need at least two rows to fit covariate scaling");
    Scaling s;
    s.lo = x.colwise().minCoeff().transpose();
    s.hi = x.colwise().maxCoeff().transpose();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (!(s.hi[j] > s.lo[j])) throw ConstantColumn("covariate column " + std::to_string(j + 1) + " is constant");
    }
    return s;
}

std::pair<ObservationSeries, Scaling> scale_covariates(const ObservationSeries& series) {
    Scaling s;
    try {
        s = fit_scaling(series.x);
    } catch (const ConstantColumn& e) {
        for (Eigen::Index j = 0; j < series.x.cols(); ++j) {
            if (series.x.rows() >= 2 && series.x.col(j).maxCoeff() == series.x.col(j).minCoeff()) {
                throw ConstantColumn("covariate '" + series.factor_names[static_cast<std::size_t>(j)] + "' is constant");
            }
        }
        throw;
    }
    ObservationSeries out = series;
    out.x = s.apply(series.x);
    return {std::move(out), std::move(s)};
}

void write_scaling(const std::filesystem::path& path, const Scaling& scaling, const std::vector<std::string>& names) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << "factor,lo,hi\n";
    for (Eigen::Index j = 0; j < scaling.lo.size(); ++j) {
        os << names.at(static_cast<std::size_t>(j)) << ',' << format_real(scaling.lo[j]) << ','
           << format_real(scaling.hi[j]) << '\n';
    }
}

Scaling read_scaling(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingArtifact("scaling file not found: " + path.string());
    const CsvTable table = read_csv(path);
    Scaling s;
    s.lo.resize(static_cast<Eigen::Index>(table.rows.size()));
    s.hi.resize(static_cast<Eigen::Index>(table.rows.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto where = path.string() + ":" + std::to_string(table.line_numbers[r]);
        s.lo[static_cast<Eigen::Index>(r)] = parse_double(table.rows[r].at(1), where);
        s.hi[static_cast<Eigen::Index>(r)] = parse_double(table.rows[r].at(2), where);
    }
    return s;
}

double SyntheticStudy::beta_true(double x) { return std::sin(3.0 * x) * std::exp(-x) + 0.2; }
double SyntheticStudy::gamma_true(double x) { return std::sin(3.0 * x); }
double SyntheticStudy::mean_true(double t, double x) {
    const double s = t / 10.0;
    return 5.0 * beta_true(x) + gamma_true(x) * s * s;
}

SyntheticStudy make_synthetic(std::uint64_t seed, std::size_t total, std::size_t train) {
    if (train < 2 || train >= total) throw ConfigError("synthetic split must leave both train and test rows");
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> xs(total);
    for (auto& x : xs) x = unif(rng);

    ObservationSeries all;
    all.factor_names = {"x"};
    all.population = 1.0;
    all.city = "synthetic";
    all.x.resize(static_cast<Eigen::Index>(total), 1);
    for (std::size_t t = 1; t <= total; ++t) {
        const double x = xs[t - 1];
        std::poisson_distribution<std::int64_t> poisson(SyntheticStudy::mean_true(static_cast<double>(t), x));
        all.x(static_cast<Eigen::Index>(t - 1), 0) = x;
        all.y.push_back(poisson(rng));
        all.day_numbers.push_back(static_cast<std::int64_t>(t));
        all.dates.push_back(std::to_string(t));
    }
    return SyntheticStudy{slice(all, 0, train), slice(all, train, total)};
}

}  // namespace epical
