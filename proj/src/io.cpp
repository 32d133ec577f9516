#include "oadesign/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "oadesign/errors.hpp"

namespace oadesign {

namespace {

std::string format_double(double v)
{
    if (!std::isfinite(v)) {
        return "null";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_json(std::ostringstream& os, const nlohmann::ordered_json& j, int indent, int depth)
{
    const auto newline = [&](int d) {
        if (indent >= 0) {
            os << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
        }
    };
    const char* sep = indent >= 0 ? ": " : ":";
    switch (j.type()) {
    case nlohmann::ordered_json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) {
                os << ',';
            }
            first = false;
            newline(depth + 1);
            os << nlohmann::ordered_json(it.key()).dump() << sep;
            write_json(os, it.value(), indent, depth + 1);
        }
        newline(depth);
        os << '}';
        return;
    }
    case nlohmann::ordered_json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        // Arrays of scalars stay on one line.
        const bool flat = std::none_of(j.begin(), j.end(), [](const auto& e) { return e.is_structured(); });
        os << '[';
        bool first = true;
        for (const auto& e : j) {
            if (!first) {
                os << (flat && indent >= 0 ? ", " : ",");
            }
            first = false;
            if (!flat) {
                newline(depth + 1);
            }
            write_json(os, e, indent, depth + 1);
        }
        if (!flat) {
            newline(depth);
        }
        os << ']';
        return;
    }
    case nlohmann::ordered_json::value_t::number_float:
        os << format_double(j.get<double>());
        return;
    default:
        os << j.dump();
    }
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

} // namespace

void write_csv(std::ostream& out, const LabelledMatrix& m)
{
    out << m.corner;
    for (const auto& name : m.column_names) {
        out << ',' << name;
    }
    out << '\n';
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
        out << m.row_labels[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
            out << ',' << format_double(m.values(r, c));
        }
        out << '\n';
    }
}

LabelledMatrix read_csv(std::istream& in)
{
    LabelledMatrix m;
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header = true;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto cells = split(line);
        if (header) {
            m.corner = cells.front();
            m.column_names.assign(cells.begin() + 1, cells.end());
            header = false;
            continue;
        }
        if (cells.size() != m.column_names.size() + 1) {
            throw SpecificationError("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                     " cells, expected " + std::to_string(m.column_names.size() + 1));
        }
        m.row_labels.push_back(cells.front());
        std::vector<double> row;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cells[c], &used));
                if (used != cells[c].size()) {
                    throw std::invalid_argument(cells[c]);
                }
            } catch (const std::exception&) {
                throw SpecificationError("CSV line " + std::to_string(line_no) + ": '" + cells[c] +
                                         "' is not a number");
            }
        }
        rows.push_back(std::move(row));
    }
    if (header) {
        throw SpecificationError("CSV input is empty");
    }
    m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.column_names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return m;
}

std::vector<std::string> one_based_names(Eigen::Index n)
{
    std::vector<std::string> out;
    for (Eigen::Index i = 1; i <= n; ++i) {
        out.push_back(std::to_string(i));
    }
    return out;
}

std::string dump_json(const nlohmann::ordered_json& doc, int indent)
{
    std::ostringstream os;
    write_json(os, doc, indent, 0);
    return os.str();
}

nlohmann::ordered_json to_json(const Eigen::VectorXd& v)
{
    auto out = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

nlohmann::ordered_json to_json(const Eigen::MatrixXd& m)
{
    auto out = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out.push_back(to_json(Eigen::VectorXd(m.row(r).transpose())));
    }
    return out;
}

} // namespace oadesign
