#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace oadesign {

/// Labelled matrix as exchanged through CSV: a header row, then one row per
/// label. No quoting; labels are alphanumeric with '*' and '^'.
struct LabelledMatrix
{
    std::string corner;
    std::vector<std::string> column_names;
    std::vector<std::string> row_labels;
    Eigen::MatrixXd values;
};

void write_csv(std::ostream& out, const LabelledMatrix& m);
LabelledMatrix read_csv(std::istream& in);

/// 1..n as strings.
std::vector<std::string> one_based_names(Eigen::Index n);

/// Serializes with insertion-ordered keys and every floating-point number
/// printed with 17 significant digits.
std::string dump_json(const nlohmann::ordered_json& doc, int indent = 2);

nlohmann::ordered_json to_json(const Eigen::VectorXd& v);
nlohmann::ordered_json to_json(const Eigen::MatrixXd& m);

} // namespace oadesign
