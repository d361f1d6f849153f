#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "slidereg/image.hpp"

namespace slidereg {

// Binary PNM (P5 gray / P6 RGB), maxval 255, with the resolution carried in a
// comment line directly after the magic token:
//
//   P5
//   # mpp 0.92
//   640 480
//   255
//   <payload>
//
// Only the first comment after the magic is interpreted; later comments are
// skipped. Write then read is bit-identical, including mpp.

namespace detail {

struct PnmCursor {
    const std::string& data;
    size_t pos = 0;
    const std::string& path;

    [[noreturn]] void fail_at(const std::string& msg) const {
        fail(errc::format, path + ": " + msg + " at byte " + std::to_string(pos));
    }

    bool at_end() const { return pos >= data.size(); }

    // Skips whitespace and comments; records the first comment body seen.
    void skip_separators(std::string* first_comment) {
        while (!at_end()) {
            char c = data[pos];
            if (c == '#') {
                size_t eol = data.find('\n', pos);
                if (eol == std::string::npos) eol = data.size();
                if (first_comment && first_comment->empty())
                    *first_comment = data.substr(pos + 1, eol - pos - 1);
                pos = eol;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                return;
            }
        }
    }

    std::string token(std::string* first_comment = nullptr) {
        skip_separators(first_comment);
        if (at_end()) fail_at("unexpected end of header");
        size_t start = pos;
        while (!at_end() && !std::isspace(static_cast<unsigned char>(data[pos])) && data[pos] != '#')
            ++pos;
        return data.substr(start, pos - start);
    }
};

// `# mpp <float>` with single spaces; anything else is an ordinary comment.
inline bool parse_mpp_comment(const std::string& body, double* mpp) {
    if (body.size() < 6 || body.compare(0, 5, " mpp ") != 0) return false;
    std::string_view num(body);
    num.remove_prefix(5);
    while (!num.empty() && (num.back() == '\r' || num.back() == ' ')) num.remove_suffix(1);
    double v = 0.0;
    auto res = std::from_chars(num.data(), num.data() + num.size(), v);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size()) return false;
    if (!(v > 0.0) || !std::isfinite(v)) return false;
    *mpp = v;
    return true;
}

} // namespace detail

inline Image read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io, "cannot open '" + path + "' for reading");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    detail::PnmCursor cur{data, 0, path};
    std::string magic = cur.token();
    int channels = 0;
    if (magic == "P5") channels = 1;
    else if (magic == "P6") channels = 3;
    else cur.fail_at("unsupported magic '" + magic + "' (want P5 or P6)");

    std::string first_comment;
    std::string wtok = cur.token(&first_comment);
    std::string htok = cur.token(&first_comment);
    std::string mtok = cur.token(&first_comment);
    long long w = parse_int(wtok, path + " width");
    long long h = parse_int(htok, path + " height");
    long long maxval = parse_int(mtok, path + " maxval");
    if (w <= 0 || h <= 0) cur.fail_at("non-positive dimensions");
    if (maxval != 255) cur.fail_at("maxval " + std::to_string(maxval) + " unsupported (want 255)");
    if (cur.at_end()) cur.fail_at("missing payload");
    ++cur.pos; // exactly one whitespace byte between maxval and payload

    double mpp = 1.0;
    if (!first_comment.empty()) detail::parse_mpp_comment(first_comment, &mpp);

    size_t need = static_cast<size_t>(w) * h * channels;
    if (data.size() - cur.pos < need)
        fail(errc::format, path + ": truncated payload, need " + std::to_string(need) +
                               " bytes, have " + std::to_string(data.size() - cur.pos) +
                               " at byte " + std::to_string(cur.pos));

    Image img(static_cast<int>(w), static_cast<int>(h), channels, mpp);
    for (size_t i = 0; i < need; ++i)
        img.samples[i] = static_cast<unsigned char>(data[cur.pos + i]) / 255.0;
    return img;
}

inline void write_pnm(const Image& img, const std::string& path) {
    require(img.channels == 1 || img.channels == 3, errc::argument, "channels must be 1 or 3");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(errc::io, "cannot open '" + path + "' for writing");
    out << (img.channels == 1 ? "P5" : "P6") << "\n";
    out << "# mpp " << format_shortest(img.mpp) << "\n";
    out << img.width << " " << img.height << "\n255\n";
    std::string payload(img.samples.size(), '\0');
    for (size_t i = 0; i < img.samples.size(); ++i)
        payload[i] = static_cast<char>(clamp8(round_half_away(img.samples[i] * 255.0)));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) fail(errc::io, "write failed for '" + path + "'");
}

} // namespace slidereg
