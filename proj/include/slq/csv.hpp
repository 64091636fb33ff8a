#pragma once

#include "slq/types.hpp"

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace slq {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double x);

/// Minimal CSV emitter; numbers use format_double so identical inputs give
/// byte-identical files.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void header(const std::vector<std::string>& names);
    void field(double x);
    void field(long long x);
    void field(std::size_t x) { field(static_cast<long long>(x)); }
    void field(int x) { field(static_cast<long long>(x)); }
    void field(const std::string& s);
    void row_major(const Matrix& m);
    void end_row();

private:
    void sep();
    std::ostream& os_;
    bool first_ = true;
};

/// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

}  // namespace slq
