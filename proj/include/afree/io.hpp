/*
 * io.hpp — file formats and report serialization.
 *
 * Reports are emitted through a small ordered JSON writer with fixed
 * 17-significant-digit float formatting, so identical runs produce
 * byte-identical files. Parsing of operator and measure files goes through
 * nlohmann::json.
 *
 * Formats:
 *   operator file   {"N": int, "d": int, "l": int, "coeffs": [[[number]]]}
 *                   with coeffs[i] the l x d matrix A^(i), row-major
 *   measure file    {"d": int, "atoms": [{"point": [number], "weight": number}],
 *                    "cell": optional int}
 *   family file     {"kind": "subsolution"|"euler", "T": number,
 *                    "grid": [nt,nx,ny,nz], "cells": [{"cell": int, "atoms": [...]}]}
 *   field dump      CSV, one row per node: index coordinates then the d
 *                   value columns
 */

#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "afree/euler.hpp"
#include "afree/linear_operator.hpp"
#include "afree/periodic_field.hpp"
#include "afree/utils.hpp"
#include "afree/young_measure.hpp"

namespace afree {

class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Streaming JSON writer: keys keep insertion order, doubles are always
// %.17g, two-space indentation. Non-finite doubles become strings, since
// JSON has no representation for them.
class JsonWriter {
  public:
    JsonWriter& begin_object() {
        prefix();
        out_ << "{";
        stack_.push_back(true);
        return *this;
    }
    JsonWriter& end_object() {
        bool empty = stack_.back();
        stack_.pop_back();
        if (!empty) {
            out_ << "\n";
            indent();
        }
        out_ << "}";
        return *this;
    }
    JsonWriter& begin_array() {
        prefix();
        out_ << "[";
        stack_.push_back(true);
        return *this;
    }
    JsonWriter& end_array() {
        bool empty = stack_.back();
        stack_.pop_back();
        if (!empty) {
            out_ << "\n";
            indent();
        }
        out_ << "]";
        return *this;
    }
    JsonWriter& key(const std::string& k) {
        prefix();
        out_ << '"' << escape(k) << "\": ";
        pending_key_ = true;
        return *this;
    }
    JsonWriter& value(double v) {
        prefix();
        if (std::isfinite(v))
            out_ << format_double(v);
        else
            out_ << '"' << format_double(v) << '"';
        return *this;
    }
    JsonWriter& value(std::int64_t v) {
        prefix();
        out_ << v;
        return *this;
    }
    JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
    JsonWriter& value(bool v) {
        prefix();
        out_ << (v ? "true" : "false");
        return *this;
    }
    JsonWriter& value(const std::string& v) {
        prefix();
        out_ << '"' << escape(v) << '"';
        return *this;
    }
    JsonWriter& value(const char* v) { return value(std::string(v)); }

    template <typename T>
    JsonWriter& field(const std::string& k, const T& v) {
        key(k);
        return value(v);
    }

    JsonWriter& field(const std::string& k, const Eigen::VectorXd& v) {
        key(k);
        begin_array();
        for (Eigen::Index i = 0; i < v.size(); ++i) value(v[i]);
        return end_array();
    }

    JsonWriter& field(const std::string& k, const Eigen::VectorXi& v) {
        key(k);
        begin_array();
        for (Eigen::Index i = 0; i < v.size(); ++i) value(static_cast<std::int64_t>(v[i]));
        return end_array();
    }

    std::string str() const { return out_.str() + "\n"; }

  private:
    void prefix() {
        if (pending_key_) {
            pending_key_ = false;
            return;
        }
        if (stack_.empty()) return;
        if (!stack_.back()) out_ << ",";
        stack_.back() = false;
        out_ << "\n";
        indent();
    }
    void indent() {
        for (std::size_t i = 0; i < stack_.size(); ++i) out_ << "  ";
    }
    static std::string escape(const std::string& s) {
        std::string out;
        out.reserve(s.size());
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                case '\r': out += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        out += buf;
                    } else {
                        out += c;
                    }
            }
        }
        return out;
    }

    std::ostringstream out_;
    std::vector<bool> stack_;
    bool pending_key_ = false;
};

// --- operator files ----------------------------------------------------------

inline LinearOperator operator_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("N") || !j.contains("d") || !j.contains("l") || !j.contains("coeffs"))
        throw ParseError("operator file: need fields N, d, l, coeffs");
    int n = j.at("N").get<int>();
    int d = j.at("d").get<int>();
    int l = j.at("l").get<int>();
    if (n < 1 || d < 1 || l < 1) throw ParseError("operator file: N, d, l must be positive");
    const auto& coeffs = j.at("coeffs");
    if (!coeffs.is_array() || static_cast<int>(coeffs.size()) != n)
        throw ParseError("operator file: coeffs must hold exactly N matrices");
    std::vector<Eigen::MatrixXd> mats;
    mats.reserve(static_cast<std::size_t>(n));
    for (const auto& jm : coeffs) {
        if (!jm.is_array() || static_cast<int>(jm.size()) != l)
            throw ParseError("operator file: each matrix must have l rows");
        Eigen::MatrixXd m(l, d);
        for (int r = 0; r < l; ++r) {
            const auto& row = jm.at(static_cast<std::size_t>(r));
            if (!row.is_array() || static_cast<int>(row.size()) != d)
                throw ParseError("operator file: each row must have d entries");
            for (int c = 0; c < d; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
        mats.push_back(std::move(m));
    }
    try {
        return LinearOperator(std::move(mats));
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("operator file: ") + e.what());
    }
}

inline LinearOperator load_operator_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open operator file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("operator file is not valid JSON: " + std::string(e.what()));
    }
    return operator_from_json(j);
}

inline std::string operator_to_json_string(const LinearOperator& op) {
    JsonWriter w;
    w.begin_object();
    w.field("N", op.num_vars());
    w.field("d", op.state_dim());
    w.field("l", op.num_equations());
    w.key("coeffs").begin_array();
    for (int i = 0; i < op.num_vars(); ++i) {
        w.begin_array();
        for (int r = 0; r < op.num_equations(); ++r) {
            w.begin_array();
            for (int c = 0; c < op.state_dim(); ++c) w.value(op.coeff(i)(r, c));
            w.end_array();
        }
        w.end_array();
    }
    w.end_array();
    w.end_object();
    return w.str();
}

// Resolves "--operator": builtin names first ("euler", "divergence-<k>d",
// "demo-nonconstant"), otherwise a JSON file path.
inline LinearOperator resolve_operator(const std::string& spec) {
    if (spec == "euler") return build_euler_operator();
    if (spec == "demo-nonconstant") return axis_scaling_operator();
    if (spec.rfind("divergence-", 0) == 0 && spec.size() > 12 && spec.back() == 'd') {
        std::string num = spec.substr(11, spec.size() - 12);
        bool digits = !num.empty();
        for (char c : num) digits = digits && std::isdigit(static_cast<unsigned char>(c));
        if (digits) return divergence_operator(std::stoi(num));
    }
    return load_operator_file(spec);
}

// --- measure files -----------------------------------------------------------

inline DiscreteYoungMeasure measure_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("d") || !j.contains("atoms"))
        throw ParseError("measure file: need fields d, atoms");
    int d = j.at("d").get<int>();
    std::vector<Eigen::VectorXd> points;
    std::vector<double> weights;
    for (const auto& atom : j.at("atoms")) {
        const auto& pt = atom.at("point");
        if (static_cast<int>(pt.size()) != d) throw ParseError("measure file: atom dimension != d");
        Eigen::VectorXd p(d);
        for (int i = 0; i < d; ++i) p[i] = pt.at(static_cast<std::size_t>(i)).get<double>();
        points.push_back(std::move(p));
        weights.push_back(atom.at("weight").get<double>());
    }
    std::optional<std::int64_t> cell;
    if (j.contains("cell")) cell = j.at("cell").get<std::int64_t>();
    try {
        return DiscreteYoungMeasure(std::move(points), std::move(weights), cell);
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("measure file: ") + e.what());
    }
}

inline DiscreteYoungMeasure load_measure_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open measure file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("measure file is not valid JSON: " + std::string(e.what()));
    }
    return measure_from_json(j);
}

inline void write_measure_json(JsonWriter& w, const DiscreteYoungMeasure& nu) {
    w.begin_object();
    w.field("d", nu.dim());
    w.key("atoms").begin_array();
    for (const auto& atom : nu.atoms()) {
        w.begin_object();
        w.field("point", Eigen::VectorXd(atom.point));
        w.field("weight", atom.weight);
        w.end_object();
    }
    w.end_array();
    if (nu.cell_index()) w.field("cell", static_cast<std::int64_t>(*nu.cell_index()));
    w.end_object();
}

inline std::string measure_to_json_string(const DiscreteYoungMeasure& nu) {
    JsonWriter w;
    write_measure_json(w, nu);
    return w.str();
}

// Family file, or a homogeneous measure file (single cell). Kind defaults
// by atom dimension: 10 -> subsolution, 4 -> euler phase space.
inline MeasureFamily load_measure_family(const std::filesystem::path& path, double default_horizon = 1.0) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open measure file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("measure file is not valid JSON: " + std::string(e.what()));
    }

    auto kind_of = [](const nlohmann::json& node, int d) {
        if (node.contains("kind")) {
            std::string k = node.at("kind").get<std::string>();
            if (k == "subsolution") return MeasureKind::subsolution;
            if (k == "euler") return MeasureKind::euler_phase;
            throw ParseError("measure file: unknown kind '" + k + "'");
        }
        if (d == 10) return MeasureKind::subsolution;
        if (d == 4) return MeasureKind::euler_phase;
        throw ParseError("measure file: cannot infer kind from dimension");
    };

    MeasureFamily family;
    family.horizon = j.contains("T") ? j.at("T").get<double>() : default_horizon;
    if (!j.contains("cells") || !j.at("cells").is_array()) {
        DiscreteYoungMeasure nu = measure_from_json(j);
        family.kind = kind_of(j, nu.dim());
        family.cells.push_back(std::move(nu));
        return family;
    }
    if (!j.contains("grid")) throw ParseError("measure family: need grid with cells");
    const auto& grid = j.at("grid");
    if (grid.size() != 4) throw ParseError("measure family: grid must have 4 entries");
    for (int i = 0; i < 4; ++i) family.grid[static_cast<std::size_t>(i)] = grid.at(static_cast<std::size_t>(i)).get<int>();
    int d = j.at("d").get<int>();
    family.kind = kind_of(j, d);
    std::vector<std::optional<DiscreteYoungMeasure>> slots(static_cast<std::size_t>(family.cell_count()));
    for (const auto& cell : j.at("cells")) {
        int idx = cell.at("cell").get<int>();
        if (idx < 0 || idx >= family.cell_count()) throw ParseError("measure family: cell index out of range");
        nlohmann::json with_d = cell;
        with_d["d"] = d;
        slots[static_cast<std::size_t>(idx)] = measure_from_json(with_d);
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i]) throw ParseError("measure family: missing cell " + std::to_string(i));
        family.cells.push_back(std::move(*slots[i]));
    }
    family.validate();
    return family;
}

// --- field CSV ---------------------------------------------------------------

inline std::string field_to_csv(const PeriodicField& field) {
    std::ostringstream out;
    const GridShape& grid = field.grid();
    for (int a = 0; a < grid.rank(); ++a) out << "i" << a << ",";
    for (int c = 0; c < field.components(); ++c) out << "v" << c << (c + 1 < field.components() ? "," : "\n");
    for (std::int64_t node = 0; node < field.node_count(); ++node) {
        std::vector<int> coords = grid.coords(node);
        for (int a = 0; a < grid.rank(); ++a) out << coords[static_cast<std::size_t>(a)] << ",";
        for (int c = 0; c < field.components(); ++c)
            out << format_double(field.value(node)[c]) << (c + 1 < field.components() ? "," : "\n");
    }
    return out.str();
}

inline PeriodicField load_field_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open field file: " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw ParseError("field file: empty");
    int rank = 0;
    int d = 0;
    {
        std::istringstream hs(header);
        std::string col;
        while (std::getline(hs, col, ',')) {
            if (!col.empty() && col[0] == 'i')
                ++rank;
            else if (!col.empty() && col[0] == 'v')
                ++d;
            else
                throw ParseError("field file: unrecognized column '" + col + "'");
        }
    }
    if (rank < 1 || d < 1) throw ParseError("field file: header must list index and value columns");

    std::vector<std::vector<int>> coords;
    std::vector<std::vector<double>> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        std::vector<int> c(static_cast<std::size_t>(rank));
        std::vector<double> v(static_cast<std::size_t>(d));
        for (int a = 0; a < rank; ++a) {
            if (!std::getline(ls, tok, ',')) throw ParseError("field file: short row");
            c[static_cast<std::size_t>(a)] = std::stoi(tok);
        }
        for (int i = 0; i < d; ++i) {
            if (!std::getline(ls, tok, ',')) throw ParseError("field file: short row");
            v[static_cast<std::size_t>(i)] = std::stod(tok);
        }
        coords.push_back(std::move(c));
        values.push_back(std::move(v));
    }
    std::vector<int> dims(static_cast<std::size_t>(rank), 0);
    for (const auto& c : coords)
        for (int a = 0; a < rank; ++a)
            dims[static_cast<std::size_t>(a)] = std::max(dims[static_cast<std::size_t>(a)], c[static_cast<std::size_t>(a)] + 1);
    GridShape grid(dims);
    if (grid.node_count() != static_cast<std::int64_t>(coords.size()))
        throw ParseError("field file: row count does not fill the grid");
    PeriodicField field(grid, d);
    for (std::size_t r = 0; r < coords.size(); ++r) {
        std::int64_t node = grid.flat(coords[r]);
        for (int i = 0; i < d; ++i) field.value(node)[i] = values[r][static_cast<std::size_t>(i)];
    }
    return field;
}

}  // namespace afree
