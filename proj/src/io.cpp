#include "midicls/io.hpp"

#include "midicls/errors.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace midicls {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

// Splits one CSV record, honouring double-quoted fields.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

} // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IOError("cannot open " + path);
    std::ostringstream out;
    out << file.rdbuf();
    return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IOError("cannot write " + path);
    file << text;
    if (!file) throw IOError("write failed for " + path);
}

std::string file_digest(const std::string& path) {
    const std::string bytes = read_text_file(path);
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char b : bytes) {
        hash ^= b;
        hash *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string corpus_ids_path(const std::string& corpus_path) { return corpus_path + ".ids"; }

std::vector<IdentifiedPiece> read_corpus(const std::string& path) {
    const std::string text = read_text_file(path);
    const std::vector<TokenSeq> pieces = split_pieces(tokenize_text(text));
    std::vector<std::string> ids;
    if (std::filesystem::exists(corpus_ids_path(path))) {
        ids = split_lines(read_text_file(corpus_ids_path(path)));
        if (ids.size() != pieces.size())
            throw FormatError(corpus_ids_path(path) + " lists " + std::to_string(ids.size()) + " ids for " +
                              std::to_string(pieces.size()) + " pieces");
    } else {
        const std::string name = std::filesystem::path(path).filename().string();
        for (std::size_t i = 0; i < pieces.size(); ++i) ids.push_back(name + ":" + std::to_string(i + 1));
    }
    std::vector<IdentifiedPiece> out;
    for (std::size_t i = 0; i < pieces.size(); ++i) out.push_back({ids[i], pieces[i]});
    return out;
}

void write_corpus(const std::string& path, const std::vector<IdentifiedPiece>& pieces) {
    std::string text;
    std::string ids;
    for (const IdentifiedPiece& p : pieces) {
        if (p.tokens.empty() || p.tokens.back().kind != TokenKind::piece_end)
            throw DataError("piece " + p.id + " does not end with a piece end");
        if (p.id.find('\n') != std::string::npos) throw DataError("item id contains a newline");
        text += render_text(p.tokens);
        ids += p.id + "\n";
    }
    write_text_file(path, text);
    write_text_file(corpus_ids_path(path), ids);
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_features_csv(const std::string& path, const std::vector<FeatureVector>& features) {
    const Eigen::Index dim = features.empty() ? 0 : features.front().values.size();
    std::string out = "id";
    for (Eigen::Index j = 0; j < dim; ++j) out += ",f" + std::to_string(j);
    out += '\n';
    char buf[32];
    for (const FeatureVector& f : features) {
        if (f.values.size() != dim) throw ShapeError("feature dimensions differ");
        out += csv_field(f.source_id);
        for (Eigen::Index j = 0; j < dim; ++j) {
            const auto res = std::to_chars(buf, buf + sizeof buf, f.values(j));
            out += ',';
            out.append(buf, res.ptr);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<FeatureVector> read_features_csv(const std::string& path) {
    const std::vector<std::string> lines = split_lines(read_text_file(path));
    if (lines.empty()) throw FormatError(path + " has no header");
    const std::vector<std::string> header = split_csv(lines.front());
    if (header.empty() || header.front() != "id") throw FormatError(path + " header must start with id");
    const std::size_t dim = header.size() - 1;
    for (std::size_t j = 0; j < dim; ++j)
        if (header[j + 1] != "f" + std::to_string(j)) throw FormatError(path + " unexpected column " + header[j + 1]);

    std::vector<FeatureVector> out;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        if (lines[row].empty()) continue;
        const std::vector<std::string> fields = split_csv(lines[row]);
        if (fields.size() != dim + 1)
            throw FormatError(path + " line " + std::to_string(row + 1) + " has " + std::to_string(fields.size()) +
                              " fields");
        FeatureVector f{Eigen::VectorXd(static_cast<Eigen::Index>(dim)), fields[0]};
        for (std::size_t j = 0; j < dim; ++j) {
            const std::string& s = fields[j + 1];
            double v = 0.0;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size())
                throw FormatError(path + " line " + std::to_string(row + 1) + " bad number '" + s + "'");
            f.values(static_cast<Eigen::Index>(j)) = v;
        }
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace midicls
