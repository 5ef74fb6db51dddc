#include "bgan/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bgan::io {

std::string format_double(double v) {
    // Try increasing precision until the decimal parses back exactly.
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0.0;
        std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
        if (back == v || (v != v && back != back)) return buf;
    }
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values) {
    require(header.size() == values.cols() || values.empty(), "write_csv: header width mismatch");
    std::string out;
    out.reserve(values.size() * 20 + 64);
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out += ',';
        out += header[j];
    }
    out += '\n';
    for (std::size_t i = 0; i < values.rows(); ++i) {
        const double* row = values.row_ptr(i);
        for (std::size_t j = 0; j < values.cols(); ++j) {
            if (j) out += ',';
            out += format_double(row[j]);
        }
        out += '\n';
    }
    write_file(path, out);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line_no) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e)
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad number '" + s + "'");
    return v;
}

}  // namespace

Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    Csv csv;
    csv.header = split_line(line);
    const std::size_t width = csv.header.size();
    // Cells are parsed in place; wide tables make per-cell strings costly.
    std::vector<double> flat;
    std::size_t rows = 0, line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = p + line.size();
        while (end > p && (end[-1] == '\r' || end[-1] == '\n')) --end;
        std::size_t cells = 0;
        while (true) {
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc() || (next != end && *next != ','))
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": bad number in column " + std::to_string(cells + 1));
            flat.push_back(v);
            ++cells;
            if (next == end) break;
            p = next + 1;  // skip the comma
            if (p == end) {  // trailing comma means an empty final cell
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": empty trailing cell");
            }
        }
        if (cells != width)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(width) + " columns");
        ++rows;
    }
    csv.values = Matrix(rows, width);
    for (std::size_t i = 0; i < flat.size(); ++i) csv.values.data()[i] = flat[i];
    return csv;
}

Vector read_row_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    const auto cells = split_line(line);
    // Accept either a bare data row or a header followed by one row.
    bool numeric = true;
    for (const auto& c : cells) {
        double v;
        auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
        if (ec != std::errc() || p != c.data() + c.size()) {
            numeric = false;
            break;
        }
    }
    std::vector<std::string> data_cells;
    std::size_t line_no = 1;
    if (numeric) {
        data_cells = cells;
    } else {
        if (!std::getline(in, line)) throw std::runtime_error(path + ": missing data row");
        ++line_no;
        data_cells = split_line(line);
    }
    Vector row(data_cells.size());
    for (std::size_t j = 0; j < data_cells.size(); ++j)
        row[j] = parse_double(data_cells[j], path, line_no);
    return row;
}

void write_row_csv(const std::string& path, const Vector& row) {
    std::string out;
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out += ',';
        out += "x_" + std::to_string(j + 1);
    }
    out += '\n';
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out += ',';
        out += format_double(row[j]);
    }
    out += '\n';
    write_file(path, out);
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(const std::string& text) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(text)));
    return buf;
}

void ensure_dir(const std::string& path) {
    std::filesystem::create_directories(path);
}

}  // namespace bgan::io
