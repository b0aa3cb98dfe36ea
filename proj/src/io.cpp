#include "gvs/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "binary_io.hpp"
#include "gvs/error.hpp"
#include "json.hpp"

namespace gvs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

fs::path with_suffix(const fs::path& base, const std::string& suffix) { return fs::path(base.string() + suffix); }

std::vector<std::string> read_lines(const fs::path& path) {
    std::istringstream in(detail::read_text(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

template <typename T>
T parse_number(const std::string& text, const fs::path& path, std::size_t line_no) {
    T value{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": cannot parse number '" + text + "'");
    }
    return value;
}

// std::from_chars for double is not available in every standard library.
double parse_double(const std::string& text, const fs::path& path, std::size_t line_no) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty()) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": cannot parse number '" + text + "'");
    }
    return v;
}

bool skip_line(const std::string& line) { return line.empty() || line[0] == '#'; }

}  // namespace

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

fs::path embedding_base(const fs::path& path) {
    std::string s = path.string();
    for (const std::string suffix : {".meta.json", ".f32", ".ids"}) {
        if (ends_with(s, suffix)) return fs::path(s.substr(0, s.size() - suffix.size()));
    }
    return path;
}

EmbeddingMatrix load_embeddings(const fs::path& path) {
    const fs::path base = embedding_base(path);
    const fs::path meta_path = with_suffix(base, ".meta.json");
    json meta;
    try {
        meta = json::parse(detail::read_text(meta_path));
    } catch (const json::parse_error& e) {
        throw FormatError(meta_path.string() + ": invalid JSON: " + e.what());
    }
    if (!meta.is_object()) throw FormatError(meta_path.string() + ": expected a JSON object");
    if (!meta.contains("dim") || !meta["dim"].is_number_integer() || !meta.contains("count") ||
        !meta["count"].is_number_integer()) {
        throw FormatError(meta_path.string() + ": 'dim' and 'count' must be integers");
    }
    const auto dim = meta["dim"].get<long long>();
    const auto count = meta["count"].get<long long>();
    if (dim < 1) throw FormatError(meta_path.string() + ": dim must be >= 1, got " + std::to_string(dim));
    if (count < 0) throw FormatError(meta_path.string() + ": count must be >= 0");
    const std::string dtype = meta.value("dtype", std::string("f32le"));
    if (dtype != "f32le") throw FormatError(meta_path.string() + ": unsupported dtype '" + dtype + "'");

    const fs::path raw_path = with_suffix(base, ".f32");
    const auto bytes = detail::read_file(raw_path);
    const auto expected = static_cast<std::size_t>(count) * static_cast<std::size_t>(dim) * 4;
    if (bytes.size() != expected) {
        throw FormatError(raw_path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                          std::to_string(bytes.size()));
    }
    const auto values = detail::decode_f32le(bytes);
    Matrix data = Eigen::Map<const Matrix>(values.data(), count, dim);
    require_finite(data, raw_path.string());

    std::vector<std::string> ids;
    const fs::path ids_path = with_suffix(base, ".ids");
    if (fs::exists(ids_path)) {
        ids = read_lines(ids_path);
        if (ids.size() != static_cast<std::size_t>(count)) {
            throw FormatError(ids_path.string() + ": expected " + std::to_string(count) + " ids, found " +
                              std::to_string(ids.size()));
        }
    } else {
        ids = EmbeddingMatrix::default_ids(static_cast<std::size_t>(count));
    }
    return EmbeddingMatrix(std::move(data), std::move(ids));
}

void save_embeddings(const EmbeddingMatrix& x, const fs::path& path) {
    const fs::path base = embedding_base(path);
    require_finite(x.data(), "save_embeddings");
    json meta = {{"count", x.rows()}, {"dim", x.dim()}, {"dtype", "f32le"}};
    detail::write_text(with_suffix(base, ".meta.json"), meta.dump(2) + "\n");
    const auto bytes = detail::encode_f32le(x.data().data(), x.rows() * x.dim());
    detail::write_file(with_suffix(base, ".f32"), bytes.data(), bytes.size());
    const fs::path ids_path = with_suffix(base, ".ids");
    if (x.ids() != EmbeddingMatrix::default_ids(x.rows())) {
        std::string text;
        for (const auto& id : x.ids()) {
            if (id.find('\n') != std::string::npos) throw FormatError("row id contains a newline");
            text += id;
            text += '\n';
        }
        detail::write_text(ids_path, text);
    } else if (fs::exists(ids_path)) {
        fs::remove(ids_path);
    }
}

Matrix round_to_f32(const Matrix& m) {
    return m.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
}

std::vector<IndexPair> load_pairs(const fs::path& path) {
    std::vector<IndexPair> pairs;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (skip_line(lines[i])) continue;
        const auto cols = split_tabs(lines[i]);
        if (cols.size() != 2) {
            throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": expected 2 tab-separated columns");
        }
        pairs.emplace_back(parse_number<std::size_t>(cols[0], path, i + 1),
                           parse_number<std::size_t>(cols[1], path, i + 1));
    }
    return pairs;
}

void save_pairs(const std::vector<IndexPair>& pairs, const fs::path& path) {
    std::string text;
    for (const auto& [c, t] : pairs) text += std::to_string(c) + "\t" + std::to_string(t) + "\n";
    detail::write_text(path, text);
}

QrelSet load_qrels(const fs::path& path) {
    QrelSet qrels;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (skip_line(lines[i])) continue;
        const auto cols = split_tabs(lines[i]);
        if (cols.size() != 3) {
            throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": expected 3 tab-separated columns");
        }
        const int rel = parse_number<int>(cols[2], path, i + 1);
        if (rel < 0) throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": negative relevance");
        qrels[cols[0]][cols[1]] = rel;
    }
    return qrels;
}

std::vector<RunEntry> load_run(const fs::path& path) {
    std::vector<RunEntry> run;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (skip_line(lines[i])) continue;
        const auto cols = split_tabs(lines[i]);
        if (cols.size() != 4) {
            throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": expected 4 tab-separated columns");
        }
        run.push_back({cols[0], parse_number<std::size_t>(cols[1], path, i + 1), cols[2],
                       parse_double(cols[3], path, i + 1)});
    }
    return run;
}

std::string format_run(const std::vector<RunEntry>& run) {
    std::string text;
    char buf[64];
    for (const auto& e : run) {
        std::snprintf(buf, sizeof buf, "%.9g", e.score);
        text += e.query_id + "\t" + std::to_string(e.rank) + "\t" + e.doc_id + "\t" + buf + "\n";
    }
    return text;
}

std::vector<std::string> load_labels(const fs::path& path) {
    auto lines = read_lines(path);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

}  // namespace gvs
