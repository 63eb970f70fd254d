#include "hsical/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "hsical/error.hpp"

namespace hsical {

namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class ByteReader {
public:
    ByteReader(const fs::path& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw FormatError("cannot open " + path.string(), 0);
        in_.seekg(0, std::ios::end);
        size_ = static_cast<std::size_t>(in_.tellg());
        in_.seekg(0);
    }

    std::size_t offset() const noexcept { return offset_; }
    std::size_t remaining() const noexcept { return size_ - offset_; }

    void read(void* dst, std::size_t n, const char* what) {
        if (remaining() < n) throw FormatError(std::string("truncated ") + what + " in " + path_.string(), offset_);
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (!in_) throw FormatError(std::string("read failure in ") + what, offset_);
        offset_ += n;
    }

    template <typename T>
    T get(const char* what) {
        T v;
        read(&v, sizeof(T), what);
        return v;
    }

private:
    std::ifstream in_;
    fs::path path_;
    std::size_t size_ = 0;
    std::size_t offset_ = 0;
};

class ByteWriter {
public:
    explicit ByteWriter(const fs::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw Error("cannot open " + path.string() + " for writing");
    }
    void write(const void* src, std::size_t n) { out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n)); }
    template <typename T>
    void put(T v) {
        write(&v, sizeof(T));
    }
    void finish() {
        out_.flush();
        if (!out_) throw Error("write failure");
    }

private:
    std::ofstream out_;
};

void check_magic(ByteReader& r, const char* expected) {
    char magic[4];
    r.read(magic, 4, "magic");
    if (std::memcmp(magic, expected, 4) != 0)
        throw FormatError(std::string("bad magic, expected ") + expected, 0);
}

std::size_t checked_product(std::initializer_list<std::uint64_t> dims, std::size_t offset) {
    std::uint64_t p = 1;
    for (std::uint64_t d : dims) {
        if (d != 0 && p > std::numeric_limits<std::uint64_t>::max() / 4 / d)
            throw FormatError("dimension overflow", offset);
        p *= d;
    }
    if (p > std::numeric_limits<std::size_t>::max() / 4) throw FormatError("dimension overflow", offset);
    return static_cast<std::size_t>(p);
}

// ---- CSV helpers ----

struct CsvLine {
    std::size_t number;
    std::vector<std::string> fields;
};

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<CsvLine> read_csv_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    std::vector<CsvLine> lines;
    std::string raw;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (number == 1 && raw.size() >= 3 && raw.compare(0, 3, "\xEF\xBB\xBF") == 0) raw.erase(0, 3);
        std::string t = trim(raw);
        if (t.empty() || t[0] == '#') continue;
        lines.push_back({number, split(t)});
    }
    return lines;
}

void expect_header(const std::vector<CsvLine>& lines, const std::vector<std::string>& columns, const fs::path& path) {
    if (lines.empty()) throw ParseError("missing header in " + path.string(), 0);
    if (lines.front().fields != columns) {
        std::string want;
        for (std::size_t k = 0; k < columns.size(); ++k) want += (k ? "," : "") + columns[k];
        throw ParseError("expected header '" + want + "' in " + path.string(), lines.front().number);
    }
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("invalid number '" + s + "'", line);
    return v;
}

int parse_int(const std::string& s, std::size_t line) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("invalid integer '" + s + "'", line);
    return v;
}

void expect_fields(const CsvLine& l, std::size_t n) {
    if (l.fields.size() != n)
        throw ParseError("expected " + std::to_string(n) + " fields, found " + std::to_string(l.fields.size()), l.number);
}

std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::ofstream open_text(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    return out;
}

void write_comment(std::ofstream& out, const std::string& comment) {
    if (comment.empty()) return;
    std::istringstream ss(comment);
    std::string line;
    while (std::getline(ss, line)) out << "# " << line << '\n';
}

// Builds spectra from (key, wavelength, value) rows, enforcing strictly increasing wavelengths per key.
struct SpectrumBuilder {
    std::vector<double> wl, val;
    std::size_t last_line = 0;

    void add(double w, double v, std::size_t line) {
        if (!wl.empty()) {
            if (w == wl.back()) throw ParseError("duplicate wavelength " + fmt(w), line);
            if (w < wl.back()) throw ParseError("wavelengths not increasing at " + fmt(w), line);
        }
        wl.push_back(w);
        val.push_back(v);
        last_line = line;
    }
    SampledSpectrum build() {
        if (wl.size() < 2) throw ParseError("spectrum needs at least two samples", last_line);
        return SampledSpectrum(std::move(wl), std::move(val));
    }
};

}  // namespace

// ---- HSIC ----

Hypercube read_cube(const fs::path& path) {
    ByteReader r(path);
    check_magic(r, "HSIC");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kFormatVersion) throw FormatError("unsupported cube version " + std::to_string(version), 4);
    const auto H = r.get<std::uint32_t>("height");
    const auto W = r.get<std::uint32_t>("width");
    const auto N = r.get<std::uint32_t>("band count");
    const auto kind = r.get<std::uint8_t>("kind");
    std::uint8_t pad[3];
    r.read(pad, 3, "padding");
    if (H == 0 || W == 0 || N == 0) throw FormatError("zero cube dimension", 8);
    if (H > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
        W > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
        N > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
        throw FormatError("dimension overflow", 8);
    if (kind > 2) throw FormatError("unknown cube kind " + std::to_string(kind), 20);
    const std::size_t count = checked_product({H, W, N}, 8);
    if (r.remaining() < 4ull * N + 4ull * count)
        throw FormatError("truncated payload: need " + std::to_string(4ull * N + 4ull * count) + " bytes, have " +
                              std::to_string(r.remaining()),
                          r.offset());

    std::vector<float> centers_f(N);
    r.read(centers_f.data(), 4ull * N, "band centers");
    std::vector<float> payload(count);
    r.read(payload.data(), 4ull * count, "payload");
    if (r.remaining() != 0) throw FormatError("trailing bytes after payload", r.offset());

    return Hypercube(static_cast<int>(H), static_cast<int>(W), static_cast<int>(N), static_cast<CubeKind>(kind),
                     std::vector<double>(centers_f.begin(), centers_f.end()),
                     std::vector<double>(payload.begin(), payload.end()));
}

void write_cube(const fs::path& path, const Hypercube& cube) {
    ByteWriter w(path);
    w.write("HSIC", 4);
    w.put<std::uint32_t>(kFormatVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cube.height()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cube.width()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cube.bands()));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(cube.kind()));
    const std::uint8_t pad[3] = {0, 0, 0};
    w.write(pad, 3);
    for (double c : cube.band_centers()) w.put<float>(static_cast<float>(c));
    constexpr std::size_t kChunk = 1 << 16;
    std::vector<float> buf;
    buf.reserve(kChunk);
    auto data = cube.data();
    for (std::size_t k = 0; k < data.size(); k += kChunk) {
        const std::size_t n = std::min(kChunk, data.size() - k);
        buf.assign(n, 0.0f);
        for (std::size_t m = 0; m < n; ++m) buf[m] = static_cast<float>(data[k + m]);
        w.write(buf.data(), 4 * n);
    }
    w.finish();
}

// ---- HSIV ----

MosaicVideo read_mosaic_video(const fs::path& path) {
    ByteReader r(path);
    check_magic(r, "HSIV");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kFormatVersion) throw FormatError("unsupported video version " + std::to_string(version), 4);
    const auto H = r.get<std::uint32_t>("height");
    const auto W = r.get<std::uint32_t>("width");
    const auto pr = r.get<std::uint32_t>("pattern rows");
    const auto pc = r.get<std::uint32_t>("pattern cols");
    const auto T = r.get<std::uint32_t>("frame count");
    const auto exposure = r.get<float>("exposure");
    const auto bit_depth = r.get<std::uint8_t>("bit depth");
    std::uint8_t pad[3];
    r.read(pad, 3, "padding");
    std::uint8_t layout_bytes[16];
    r.read(layout_bytes, 16, "band layout");

    if (H == 0 || W == 0) throw FormatError("zero frame dimension", 8);
    if (pr == 0 || pc == 0 || pr * pc > 16) throw FormatError("mosaic pattern must have 1..16 cells", 16);
    if (H % pr != 0 || W % pc != 0) throw FormatError("frame dimensions are not multiples of the pattern", 8);
    if (T == 0) throw FormatError("video has no frames", 24);
    if (H > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
        W > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
        T > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
        throw FormatError("dimension overflow", 8);
    if (!(exposure > 0.0f)) throw FormatError("exposure must be positive", 28);

    std::vector<int> bands(layout_bytes, layout_bytes + pr * pc);
    MosaicLayout layout = [&] {
        try {
            return MosaicLayout(static_cast<int>(pr), static_cast<int>(pc), bands);
        } catch (const InvalidArgument& e) {
            throw FormatError(std::string("invalid band layout: ") + e.what(), 36);
        }
    }();

    const std::size_t frame_size = checked_product({H, W}, 8);
    const std::size_t total = checked_product({H, W, T}, 8);
    std::vector<float> data(total);
    for (std::uint32_t t = 0; t < T; ++t) {
        if (r.remaining() < 4 * frame_size)
            throw FormatError("truncated payload in frame " + std::to_string(t) + " of " + std::to_string(T),
                              r.offset());
        r.read(data.data() + t * frame_size, 4 * frame_size, "frame");
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after frame " + std::to_string(T - 1), r.offset());
    return MosaicVideo(static_cast<int>(H), static_cast<int>(W), std::move(layout), exposure, bit_depth,
                       static_cast<int>(T), std::move(data));
}

namespace {

void write_video_header(ByteWriter& w, int H, int W, const MosaicLayout& layout, int frames, double exposure,
                        int bit_depth) {
    if (layout.band_count() > 16) throw InvalidArgument("HSIV supports at most 16 pattern cells");
    w.write("HSIV", 4);
    w.put<std::uint32_t>(kFormatVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(H));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(W));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layout.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layout.cols()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(frames));
    w.put<float>(static_cast<float>(exposure));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(bit_depth));
    const std::uint8_t pad[3] = {0, 0, 0};
    w.write(pad, 3);
    std::uint8_t bytes[16] = {};
    for (int k = 0; k < layout.band_count(); ++k) bytes[k] = static_cast<std::uint8_t>(layout.bands()[k]);
    w.write(bytes, 16);
}

}  // namespace

void write_mosaic_video(const fs::path& path, const MosaicVideo& video) {
    ByteWriter w(path);
    write_video_header(w, video.height(), video.width(), video.layout(), video.frame_count(), video.exposure_ms(),
                       video.bit_depth());
    w.write(video.data().data(), 4 * video.data().size());
    w.finish();
}

MosaicFrame read_mosaic_frame(const fs::path& path) {
    MosaicVideo v = read_mosaic_video(path);
    if (v.frame_count() != 1)
        throw FormatError("expected a single-frame file, found " + std::to_string(v.frame_count()) + " frames", 24);
    return v.frame(0);
}

void write_mosaic_frame(const fs::path& path, const MosaicFrame& frame) {
    ByteWriter w(path);
    write_video_header(w, frame.height(), frame.width(), frame.layout(), 1, frame.exposure_ms(), frame.bit_depth());
    w.write(frame.data().data(), 4 * frame.data().size());
    w.finish();
}

std::string sniff_magic(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[4] = {};
    if (!in.read(magic, 4)) return {};
    std::string m(magic, 4);
    return (m == "HSIC" || m == "HSIV") ? m : std::string{};
}

// ---- CSV ----

SampledSpectrum load_sampled_spectrum(const fs::path& path) {
    auto lines = read_csv_lines(path);
    expect_header(lines, {"wavelength_nm", "value"}, path);
    SpectrumBuilder b;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        expect_fields(lines[k], 2);
        b.add(parse_double(lines[k].fields[0], lines[k].number), parse_double(lines[k].fields[1], lines[k].number),
              lines[k].number);
    }
    if (b.wl.size() < 2) throw ParseError("spectrum needs at least two samples", lines.back().number);
    return b.build();
}

void write_sampled_spectrum(const fs::path& path, const SampledSpectrum& s) {
    auto out = open_text(path);
    out << "wavelength_nm,value\n";
    for (std::size_t k = 0; k < s.size(); ++k) out << fmt(s.wavelengths()[k]) << ',' << fmt(s.values()[k]) << '\n';
}

BandResponseSet load_band_responses(const fs::path& path) {
    auto lines = read_csv_lines(path);
    expect_header(lines, {"band", "wavelength_nm", "value"}, path);
    std::vector<SpectrumBuilder> builders;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto& l = lines[k];
        expect_fields(l, 3);
        const int band = parse_int(l.fields[0], l.number);
        if (band < 0 || band > static_cast<int>(builders.size()))
            throw ParseError("band indices must start at 0 and be contiguous", l.number);
        if (band == static_cast<int>(builders.size())) builders.emplace_back();
        builders[band].add(parse_double(l.fields[1], l.number), parse_double(l.fields[2], l.number), l.number);
    }
    if (builders.empty()) throw ParseError("no band responses in " + path.string(), lines.front().number);
    std::vector<SampledSpectrum> responses;
    for (auto& b : builders) responses.push_back(b.build());
    try {
        return BandResponseSet(std::move(responses));
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what(), lines.back().number);
    }
}

void write_band_responses(const fs::path& path, const BandResponseSet& bands) {
    auto out = open_text(path);
    out << "band,wavelength_nm,value\n";
    for (int n = 0; n < bands.size(); ++n) {
        const auto& r = bands[n];
        for (std::size_t k = 0; k < r.size(); ++k)
            out << n << ',' << fmt(r.wavelengths()[k]) << ',' << fmt(r.values()[k]) << '\n';
    }
}

std::array<SampledSpectrum, 3> load_cmfs(const fs::path& path) {
    auto lines = read_csv_lines(path);
    expect_header(lines, {"wavelength_nm", "x", "y", "z"}, path);
    SpectrumBuilder b[3];
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto& l = lines[k];
        expect_fields(l, 4);
        const double w = parse_double(l.fields[0], l.number);
        for (int c = 0; c < 3; ++c) b[c].add(w, parse_double(l.fields[1 + c], l.number), l.number);
    }
    return {b[0].build(), b[1].build(), b[2].build()};
}

std::vector<std::vector<double>> load_matrix(const fs::path& path) {
    auto lines = read_csv_lines(path);
    std::vector<std::vector<double>> rows;
    for (const auto& l : lines) {
        std::vector<double> row;
        for (const auto& f : l.fields) row.push_back(parse_double(f, l.number));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("ragged matrix row", l.number);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("empty matrix in " + path.string(), 0);
    return rows;
}

void write_matrix(const fs::path& path, const std::vector<std::vector<double>>& rows, const std::string& comment) {
    auto out = open_text(path);
    write_comment(out, comment);
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << fmt(row[k]);
        out << '\n';
    }
}

std::vector<double> load_band_values(const fs::path& path) {
    auto lines = read_csv_lines(path);
    expect_header(lines, {"band", "value"}, path);
    std::vector<double> values;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto& l = lines[k];
        expect_fields(l, 2);
        if (parse_int(l.fields[0], l.number) != static_cast<int>(values.size()))
            throw ParseError("band indices must start at 0 and be contiguous", l.number);
        values.push_back(parse_double(l.fields[1], l.number));
    }
    if (values.empty()) throw ParseError("no band values in " + path.string(), 0);
    return values;
}

void write_band_values(const fs::path& path, const std::vector<double>& values, const std::string& comment) {
    auto out = open_text(path);
    write_comment(out, comment);
    out << "band,value\n";
    for (std::size_t n = 0; n < values.size(); ++n) out << n << ',' << fmt(values[n]) << '\n';
}

std::map<std::string, LabReference> load_tile_lab(const fs::path& path) {
    auto lines = read_csv_lines(path);
    expect_header(lines, {"tile_id", "L", "a", "b"}, path);
    std::map<std::string, LabReference> out;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto& l = lines[k];
        expect_fields(l, 4);
        LabReference lab{parse_double(l.fields[1], l.number), parse_double(l.fields[2], l.number),
                         parse_double(l.fields[3], l.number)};
        if (!out.emplace(l.fields[0], lab).second) throw ParseError("duplicate tile id " + l.fields[0], l.number);
    }
    return out;
}

void write_tile_lab(const fs::path& path, const std::map<std::string, LabReference>& tiles) {
    auto out = open_text(path);
    out << "tile_id,L,a,b\n";
    for (const auto& [id, lab] : tiles) out << id << ',' << fmt(lab.L) << ',' << fmt(lab.a) << ',' << fmt(lab.b) << '\n';
}

std::vector<TileRoi> load_tile_layout(const fs::path& path) {
    auto lines = read_csv_lines(path);
    expect_header(lines, {"tile_id", "i", "j"}, path);
    std::vector<TileRoi> out;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto& l = lines[k];
        expect_fields(l, 3);
        auto it = std::find_if(out.begin(), out.end(), [&](const TileRoi& t) { return t.tile_id == l.fields[0]; });
        if (it == out.end()) {
            out.push_back({l.fields[0], {}});
            it = std::prev(out.end());
        }
        it->centers.emplace_back(parse_int(l.fields[1], l.number), parse_int(l.fields[2], l.number));
    }
    return out;
}

void write_tile_layout(const fs::path& path, const std::vector<TileRoi>& layout) {
    auto out = open_text(path);
    out << "tile_id,i,j\n";
    for (const auto& t : layout)
        for (auto [i, j] : t.centers) out << t.tile_id << ',' << i << ',' << j << '\n';
}

std::map<std::string, SampledSpectrum> load_tile_spectra(const fs::path& path) {
    auto lines = read_csv_lines(path);
    expect_header(lines, {"tile_id", "wavelength_nm", "value"}, path);
    std::map<std::string, SpectrumBuilder> builders;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto& l = lines[k];
        expect_fields(l, 3);
        builders[l.fields[0]].add(parse_double(l.fields[1], l.number), parse_double(l.fields[2], l.number), l.number);
    }
    std::map<std::string, SampledSpectrum> out;
    for (auto& [id, b] : builders) out.emplace(id, b.build());
    return out;
}

void write_tile_spectra(const fs::path& path, const std::map<std::string, SampledSpectrum>& tiles) {
    auto out = open_text(path);
    out << "tile_id,wavelength_nm,value\n";
    for (const auto& [id, s] : tiles)
        for (std::size_t k = 0; k < s.size(); ++k)
            out << id << ',' << fmt(s.wavelengths()[k]) << ',' << fmt(s.values()[k]) << '\n';
}

}  // namespace hsical
