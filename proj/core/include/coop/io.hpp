#pragma once

#include "coop/net_core.hpp"

#include <filesystem>
#include <string>

namespace coop {

/// Reads a CSV incidence matrix: header row of column names (first cell is a
/// corner label), then one line per row species with its name first.
CountMatrix read_count_matrix(const std::filesystem::path& path);
CountMatrix parse_count_matrix(const std::string& text);

void write_count_matrix(const CountMatrix& r, const std::filesystem::path& path);
std::string format_count_matrix(const CountMatrix& r);

/// Writes a binary grid using the names of `like` for the header and rows.
void write_binary_matrix(const BinaryMatrix& m, const CountMatrix& like,
                         const std::filesystem::path& path);

/// Fit document fields: model, alpha, beta, pi, lambda, mu, g, row_labels,
/// col_labels, icl, seed, missing_prob. LBM documents omit lambda/mu/g.
void write_fit(const FitResult& result, const std::filesystem::path& path);
std::string format_fit(const FitResult& result);
FitResult read_fit(const std::filesystem::path& path);
FitResult parse_fit(const std::string& text);

}  // namespace coop
