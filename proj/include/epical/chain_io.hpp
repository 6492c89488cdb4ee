#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "epical/mcmc.hpp"

namespace epical {

/// Chain draws as comma-delimited text, one row per stored draw:
/// draw,beta_1..beta_n,gamma_1..gamma_n,rho,phi_1..phi_d,mu1,mu2,tau
/// Reals are written with 17 significant digits, so a round trip is bit-exact.
void write_chain(std::ostream& os, const ChainSamples& chain);
void write_chain(const std::filesystem::path& path, const ChainSamples& chain);

/// Acceptance rates are not part of the file and come back as zeros.
ChainSamples read_chain(std::istream& is);
ChainSamples read_chain(const std::filesystem::path& path);

/// printf("%.17g") formatting.
std::string format_real(double v);

}  // namespace epical
