#include "slq/csv.hpp"

#include <charconv>
#include <fstream>

namespace slq {

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) return "nan";
    return {buf, ptr};
}

void CsvWriter::sep() {
    if (!first_) os_ << ',';
    first_ = false;
}

void CsvWriter::header(const std::vector<std::string>& names) {
    for (const auto& n : names) field(n);
    end_row();
}

void CsvWriter::field(double x) {
    sep();
    os_ << format_double(x);
}

void CsvWriter::field(long long x) {
    sep();
    os_ << x;
}

void CsvWriter::field(const std::string& s) {
    sep();
    os_ << s;
}

void CsvWriter::row_major(const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) field(m(i, j));
}

void CsvWriter::end_row() {
    os_ << '\n';
    first_ = true;
}

void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        body(out);
        out.flush();
        if (!out) throw Error("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace slq
