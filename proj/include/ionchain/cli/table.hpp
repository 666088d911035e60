#pragma once

#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace ionchain::cli {

/// Column-major result table; every command emits exactly one.
class Table {
public:
    using Values = std::variant<std::vector<double>, std::vector<std::string>>;

    struct Column {
        std::string name;
        Values values;
    };

    void add(std::string name, std::vector<double> values) { push(std::move(name), std::move(values)); }
    void add(std::string name, std::vector<std::string> values) { push(std::move(name), std::move(values)); }

    std::size_t rows() const noexcept { return rows_; }
    const std::vector<Column>& columns() const noexcept { return columns_; }

    const std::vector<double>& numeric(const std::string& name) const {
        for (const auto& c : columns_)
            if (c.name == name) return std::get<std::vector<double>>(c.values);
        throw std::out_of_range("no column '" + name + "'");
    }

    /// Header row, then one line per row; doubles with 12 significant digits.
    void write_csv(std::ostream& os) const {
        for (std::size_t c = 0; c < columns_.size(); ++c) os << (c ? "," : "") << columns_[c].name;
        os << '\n';
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t c = 0; c < columns_.size(); ++c) {
                if (c) os << ',';
                std::visit([&](const auto& v) { os << format(v[r]); }, columns_[c].values);
            }
            os << '\n';
        }
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json data = nlohmann::ordered_json::object();
        for (const auto& c : columns_) std::visit([&](const auto& v) { data[c.name] = v; }, c.values);
        return data;
    }

    static std::string format(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", v);
        return buf;
    }
    static const std::string& format(const std::string& s) { return s; }

private:
    void push(std::string name, Values values) {
        const std::size_t n = std::visit([](const auto& v) { return v.size(); }, values);
        if (columns_.empty())
            rows_ = n;
        else if (n != rows_)
            throw std::logic_error("column '" + name + "' has " + std::to_string(n) + " rows, expected " +
                                   std::to_string(rows_));
        columns_.push_back({std::move(name), std::move(values)});
    }

    std::vector<Column> columns_;
    std::size_t rows_ = 0;
};

}  // namespace ionchain::cli
