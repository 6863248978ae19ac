#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

namespace ehlink {

/// Comma-separated output with a header row and full-precision floats,
/// so identical inputs always serialize to identical bytes.
class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void header(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i) out_ << ',';
            out_ << names[i];
        }
        out_ << '\n';
    }

    CsvWriter& cell(const std::string& value) {
        sep();
        out_ << value;
        return *this;
    }

    CsvWriter& cell(double value) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", value);
        return cell(std::string(buf));
    }

    template <class T>
        requires std::is_integral_v<T>
    CsvWriter& cell(T value) {
        return cell(std::to_string(value));
    }

    void endrow() {
        out_ << '\n';
        first_ = true;
    }

  private:
    void sep() {
        if (!first_) out_ << ',';
        first_ = false;
    }

    std::ostream& out_;
    bool first_ = true;
};

}  // namespace ehlink
