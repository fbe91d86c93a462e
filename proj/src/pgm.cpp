#include "ltrs/pgm.hpp"

#include "ltrs/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace ltrs {

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

int parse_int(const std::string& tok, const std::filesystem::path& path) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::Format, "malformed PGM header in " + path.string());
    }
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const Image& img, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw Error(ErrorCode::Parameter, "PGM bit depth must be 8 or 16");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path.string());
    const int maxval = bit_depth == 8 ? 255 : 65535;
    out << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
    std::vector<unsigned char> buf;
    buf.reserve(img.size() * (bit_depth / 8));
    for (double v : img.values()) {
        const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
        if (bit_depth == 16) buf.push_back(static_cast<unsigned char>(q >> 8));
        buf.push_back(static_cast<unsigned char>(q & 0xff));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

PgmImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open: " + path.string());
    if (next_token(in) != "P5") throw Error(ErrorCode::Format, "not a binary PGM (P5): " + path.string());
    const int width = parse_int(next_token(in), path);
    const int height = parse_int(next_token(in), path);
    const int maxval = parse_int(next_token(in), path);
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
        throw Error(ErrorCode::Format, "invalid PGM header values in " + path.string());
    }
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(static_cast<std::size_t>(width) * height * bytes);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
        throw Error(ErrorCode::Truncation, "PGM payload truncated: " + path.string());
    }
    Image img(height, width);
    auto vals = img.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const unsigned q = bytes == 2 ? (static_cast<unsigned>(buf[2 * i]) << 8) | buf[2 * i + 1] : buf[i];
        vals[i] = static_cast<double>(q) / maxval;
    }
    return {std::move(img), bytes == 2 ? 16 : 8};
}

}  // namespace ltrs
