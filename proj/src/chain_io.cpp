#include "epical/chain_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "epical/errors.hpp"

namespace epical {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_real(const std::string& s, std::size_t row) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw ParseError("chain file row " + std::to_string(row) + ": not a number: '" + s + "'");
    }
    return v;
}

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

void write_chain(std::ostream& os, const ChainSamples& chain) {
    const std::size_t n = chain.days();
    const Eigen::Index d = chain.dim();
    os << "draw";
    for (std::size_t t = 1; t <= n; ++t) os << ",beta_" << t;
    for (std::size_t t = 1; t <= n; ++t) os << ",gamma_" << t;
    os << ",rho";
    for (Eigen::Index j = 1; j <= d; ++j) os << ",phi_" << j;
    os << ",mu1,mu2,tau\n";
    for (std::size_t k = 0; k < chain.draws.size(); ++k) {
        const Draw& draw = chain.draws[k];
        os << k;
        for (const double v : draw.path.beta) os << ',' << format_real(v);
        for (const double v : draw.path.gamma) os << ',' << format_real(v);
        os << ',' << format_real(draw.psi.rho);
        for (Eigen::Index j = 0; j < d; ++j) os << ',' << format_real(draw.psi.phi[j]);
        os << ',' << format_real(draw.psi.mu1) << ',' << format_real(draw.psi.mu2) << ','
           << format_real(draw.psi.tau) << '\n';
    }
}

void write_chain(const std::filesystem::path& path, const ChainSamples& chain) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    write_chain(os, chain);
    if (!os) throw IoError("write failed: " + path.string());
}

ChainSamples read_chain(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("chain file is empty");
    const auto header = split_commas(line);
    std::size_t n_beta = 0, n_gamma = 0, n_phi = 0;
    for (const auto& h : header) {
        if (starts_with(h, "beta_")) ++n_beta;
        if (starts_with(h, "gamma_")) ++n_gamma;
        if (starts_with(h, "phi_")) ++n_phi;
    }
    const std::size_t expected = 1 + n_beta + n_gamma + 1 + n_phi + 3;
    if (header.empty() || header.front() != "draw" || n_beta != n_gamma || header.size() != expected) {
        throw ParseError("chain file header is malformed");
    }
    ChainSamples out;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() != expected) throw ParseError("chain file row " + std::to_string(row) + ": wrong column count");
        Draw draw;
        std::size_t c = 1;
        draw.path.beta.resize(n_beta);
        draw.path.gamma.resize(n_gamma);
        for (std::size_t t = 0; t < n_beta; ++t) draw.path.beta[t] = parse_real(cells[c++], row);
        for (std::size_t t = 0; t < n_gamma; ++t) draw.path.gamma[t] = parse_real(cells[c++], row);
        draw.psi.rho = parse_real(cells[c++], row);
        draw.psi.phi.resize(static_cast<Eigen::Index>(n_phi));
        for (std::size_t j = 0; j < n_phi; ++j) draw.psi.phi[static_cast<Eigen::Index>(j)] = parse_real(cells[c++], row);
        draw.psi.mu1 = parse_real(cells[c++], row);
        draw.psi.mu2 = parse_real(cells[c++], row);
        draw.psi.tau = parse_real(cells[c++], row);
        out.draws.push_back(std::move(draw));
    }
    out.acceptance.phi.assign(n_phi, 0.0);
    return out;
}

ChainSamples read_chain(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingArtifact("chain file not found: " + path.string());
    return read_chain(is);
}

}  // namespace epical
