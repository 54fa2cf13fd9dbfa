#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spnnls/errors.hpp"
#include "spnnls/sparse_matrix.hpp"

namespace spnnls {

/// Accepted Matrix Market banner fields.
struct MatrixMarketHeader {
    std::string object;    // "matrix"
    std::string format;    // "coordinate" or "array"
    std::string field;     // "real" or "integer"
    std::string symmetry;  // "general" or "symmetric"
};

namespace detail {

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline double parse_real(const std::string& token, const std::string& context) {
    const char* begin = token.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw ParseError(context + ": bad numeric token '" + token + "'");
    return value;
}

inline std::size_t parse_count(const std::string& token, const std::string& context) {
    const char* begin = token.c_str();
    char* end = nullptr;
    const long long value = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0' || value < 0)
        throw ParseError(context + ": bad count token '" + token + "'");
    return static_cast<std::size_t>(value);
}

// Next line that is neither blank nor a % comment; false at end of file.
inline bool next_data_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        std::size_t pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos) continue;
        if (line[pos] == '%') continue;
        return true;
    }
    return false;
}

inline std::vector<std::string> split(const std::string& line) {
    std::istringstream stream(line);
    std::vector<std::string> tokens;
    std::string token;
    while (stream >> token) tokens.push_back(token);
    return tokens;
}

inline MatrixMarketHeader parse_banner(const std::string& line) {
    const std::vector<std::string> tokens = split(line);
    if (tokens.size() < 4 || to_lower(tokens[0]) != "%%matrixmarket")
        throw ParseError("matrix market: malformed banner line");
    MatrixMarketHeader header;
    header.object = to_lower(tokens[1]);
    header.format = to_lower(tokens[2]);
    header.field = tokens.size() > 3 ? to_lower(tokens[3]) : "";
    header.symmetry = tokens.size() > 4 ? to_lower(tokens[4]) : "general";

    if (header.object != "matrix") throw ParseError("matrix market: object must be 'matrix'");
    if (header.field == "complex" || header.field == "pattern")
        throw UnsupportedFormat("matrix market: field '" + header.field + "' not supported");
    if (header.symmetry == "hermitian" || header.symmetry == "skew-symmetric")
        throw UnsupportedFormat("matrix market: symmetry '" + header.symmetry +
                                "' not supported");
    if (header.format != "coordinate" && header.format != "array")
        throw ParseError("matrix market: unknown format '" + header.format + "'");
    if (header.field != "real" && header.field != "integer")
        throw ParseError("matrix market: unknown field '" + header.field + "'");
    if (header.symmetry != "general" && header.symmetry != "symmetric")
        throw ParseError("matrix market: unknown symmetry '" + header.symmetry + "'");
    return header;
}

inline void format_double(std::string& out, double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    out += buffer;
}

}  // namespace detail

/// Read a Matrix Market file (coordinate or array, real or integer, general
/// or symmetric) into a CSC matrix. Indices in the file are 1-based;
/// symmetric inputs have their off-diagonal entries mirrored.
inline SparseMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    const MatrixMarketHeader header = detail::parse_banner(line);

    if (!detail::next_data_line(in, line)) throw ParseError(path + ": missing size line");
    const std::vector<std::string> size_tokens = detail::split(line);

    std::vector<Triplet> entries;
    std::size_t nrows = 0, ncols = 0;

    if (header.format == "coordinate") {
        if (size_tokens.size() != 3) throw ParseError(path + ": coordinate size line needs 3 fields");
        nrows = detail::parse_count(size_tokens[0], path);
        ncols = detail::parse_count(size_tokens[1], path);
        const std::size_t nnz = detail::parse_count(size_tokens[2], path);
        if (nrows == 0 || ncols == 0) throw ParseError(path + ": zero-dimension matrix rejected");

        entries.reserve(header.symmetry == "symmetric" ? 2 * nnz : nnz);
        for (std::size_t k = 0; k < nnz; ++k) {
            if (!detail::next_data_line(in, line))
                throw ParseError(path + ": fewer entries than declared count");
            const std::vector<std::string> tokens = detail::split(line);
            if (tokens.size() != 3) throw ParseError(path + ": entry line needs 3 fields");
            const std::size_t row = detail::parse_count(tokens[0], path);
            const std::size_t col = detail::parse_count(tokens[1], path);
            const double value = detail::parse_real(tokens[2], path);
            if (row < 1 || row > nrows || col < 1 || col > ncols)
                throw ParseError(path + ": entry index out of declared bounds");
            entries.push_back({row - 1, col - 1, value});
            if (header.symmetry == "symmetric" && row != col)
                entries.push_back({col - 1, row - 1, value});
        }
        if (detail::next_data_line(in, line))
            throw ParseError(path + ": more entries than declared count");
    } else {  // array
        if (size_tokens.size() != 2) throw ParseError(path + ": array size line needs 2 fields");
        nrows = detail::parse_count(size_tokens[0], path);
        ncols = detail::parse_count(size_tokens[1], path);
        if (nrows == 0 || ncols == 0) throw ParseError(path + ": zero-dimension matrix rejected");
        const bool symmetric = header.symmetry == "symmetric";
        if (symmetric && nrows != ncols)
            throw ParseError(path + ": symmetric array must be square");

        for (std::size_t j = 0; j < ncols; ++j) {
            const std::size_t row_start = symmetric ? j : 0;
            for (std::size_t i = row_start; i < nrows; ++i) {
                if (!detail::next_data_line(in, line))
                    throw ParseError(path + ": array data ended early");
                const double value = detail::parse_real(line, path);
                if (value != 0.0) {
                    entries.push_back({i, j, value});
                    if (symmetric && i != j) entries.push_back({j, i, value});
                }
            }
        }
        if (detail::next_data_line(in, line))
            throw ParseError(path + ": trailing data after array entries");
    }

    return from_triplets(nrows, ncols, entries);
}

/// Write general coordinate real output, 1-based, column-major, with 17
/// significant digits so a re-read reproduces every double bit-exactly.
inline void write_matrix_market(const std::string& path, const SparseMatrix& A) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");

    std::string text = "%%MatrixMarket matrix coordinate real general\n";
    text += std::to_string(A.nrows());
    text += ' ';
    text += std::to_string(A.ncols());
    text += ' ';
    text += std::to_string(A.nnz());
    text += '\n';
    for (std::size_t j = 0; j < A.ncols(); ++j) {
        for (std::size_t p = A.col_begin(j); p < A.col_end(j); ++p) {
            text += std::to_string(A.rowind()[p] + 1);
            text += ' ';
            text += std::to_string(j + 1);
            text += ' ';
            detail::format_double(text, A.values()[p]);
            text += '\n';
        }
    }
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

/// One real per line; % comments and blank lines are skipped. Zero-length
/// vectors are rejected.
inline DenseVector read_vector(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    DenseVector v;
    std::string line;
    while (detail::next_data_line(in, line)) {
        const std::vector<std::string> tokens = detail::split(line);
        if (tokens.size() != 1) throw ParseError(path + ": expected one value per line");
        v.push_back(detail::parse_real(tokens[0], path));
    }
    if (v.empty()) throw ParseError(path + ": empty vector file");
    return v;
}

inline void write_vector(const std::string& path, std::span<const double> v) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    std::string text;
    for (double e : v) {
        detail::format_double(text, e);
        text += '\n';
    }
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace spnnls
