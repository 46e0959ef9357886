#include "splitforge/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "splitforge/error.hpp"

namespace splitforge {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::size_t len = end - start;
        if (len > 0 && text[start + len - 1] == '\r') --len;
        lines.emplace_back(text.substr(start, len));
        start = end + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        std::size_t end = line.find(',', start);
        if (end == std::string::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, end - start));
        start = end + 1;
    }
    return fields;
}

double parse_double(const std::string& field, std::size_t row, std::size_t col) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw ValidationError("unparseable numeric value '" + field + "' at row " +
                              std::to_string(row) + ", column " + std::to_string(col));
    }
    return value;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void check_name_order(const std::vector<std::string>& file_names, const ConceptSet& cs,
                      const std::string& what) {
    if (file_names.size() != cs.size()) {
        throw ValidationError(what + ": expected " + std::to_string(cs.size()) +
                              " concept rows, found " + std::to_string(file_names.size()));
    }
    for (std::size_t i = 0; i < file_names.size(); ++i) {
        if (file_names[i] != cs.names[i]) {
            throw ValidationError(what + ": concept name-order mismatch at row " +
                                  std::to_string(i + 1) + " ('" + file_names[i] +
                                  "' vs embeddings '" + cs.names[i] + "')");
        }
    }
}

constexpr char kMagic[4] = {'S', 'F', 'T', 'N'};

} // namespace

void validate_concept_set(const ConceptSet& cs) {
    const std::size_t n = cs.names.size();
    if (n < 2) throw ValidationError("concept set needs N >= 2, got " + std::to_string(n));
    if (cs.embeddings.rows() != n) {
        throw ValidationError("embedding row count " + std::to_string(cs.embeddings.rows()) +
                              " does not match " + std::to_string(n) + " concept names");
    }
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < n; ++i) {
        if (cs.names[i].empty()) {
            throw ValidationError("empty concept name at row " + std::to_string(i + 1));
        }
        // names cross-reference the CSV files, so separators are not allowed
        if (cs.names[i].find_first_of(",\r\n") != std::string::npos) {
            throw ValidationError("concept name '" + cs.names[i] +
                                  "' contains a separator character");
        }
        if (!seen.insert(cs.names[i]).second) {
            throw ValidationError("duplicate concept name '" + cs.names[i] + "' at row " +
                                  std::to_string(i + 1));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < cs.dim(); ++j) {
            if (!std::isfinite(cs.embeddings.at(i, j))) {
                throw ValidationError("non-finite embedding value at row " + std::to_string(i + 1) +
                                      ", column " + std::to_string(j + 1));
            }
        }
    }
}

void validate_attribute_matrix(const AttributeMatrix& am, std::size_t n_concepts) {
    std::unordered_set<std::string> seen;
    for (std::size_t a = 0; a < am.n_attributes(); ++a) {
        if (am.names[a].empty()) throw ValidationError("empty attribute name");
        if (am.names[a].find_first_of(",\r\n") != std::string::npos) {
            throw ValidationError("attribute name '" + am.names[a] +
                                  "' contains a separator character");
        }
        if (!seen.insert(am.names[a]).second) {
            throw ValidationError("duplicate attribute name '" + am.names[a] + "'");
        }
        if (am.cols[a].size() != n_concepts) {
            throw ValidationError("attribute '" + am.names[a] + "' has " +
                                  std::to_string(am.cols[a].size()) + " rows, expected " +
                                  std::to_string(n_concepts));
        }
        std::size_t pos = 0;
        for (std::uint8_t v : am.cols[a]) {
            if (v > 1) throw ValidationError("non-binary label in attribute '" + am.names[a] + "'");
            pos += v;
        }
        if (pos == 0 || pos == n_concepts) {
            throw ValidationError("degenerate attribute '" + am.names[a] +
                                  "' (needs at least 1 positive and 1 negative)");
        }
    }
}

void validate_supercategory_map(const SupercategoryMap& sm, std::size_t n_concepts) {
    if (sm.assignment.size() != n_concepts) {
        throw ValidationError("supercategory map covers " + std::to_string(sm.assignment.size()) +
                              " concepts, expected " + std::to_string(n_concepts));
    }
    if (sm.names.size() < 2) {
        throw ValidationError("supercategory map needs S >= 2, got " +
                              std::to_string(sm.names.size()));
    }
    for (std::size_t i = 0; i < sm.assignment.size(); ++i) {
        if (sm.assignment[i] < 0 || sm.assignment[i] >= static_cast<int>(sm.names.size())) {
            throw ValidationError("supercategory id out of range for concept " + std::to_string(i));
        }
    }
}

void validate_bundle(const DatasetBundle& bundle) {
    validate_concept_set(bundle.concept_set);
    validate_attribute_matrix(bundle.attributes, bundle.concept_set.size());
    if (bundle.supercategories) {
        validate_supercategory_map(*bundle.supercategories, bundle.concept_set.size());
    }
}

namespace {

ConceptSet load_embeddings_csv(const std::filesystem::path& path) {
    auto lines = split_lines(read_file(path));
    if (lines.empty()) throw ValidationError("empty embeddings file: " + path.string());

    auto header = split_fields(lines[0]);
    if (header.size() < 2 || header[0] != "name") {
        throw ValidationError("malformed embeddings header (expected 'name,d0,...'): " +
                              path.string());
    }
    const std::size_t dim = header.size() - 1;

    ConceptSet cs;
    cs.embeddings = Matrix(lines.size() - 1, dim);
    cs.names.reserve(lines.size() - 1);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto fields = split_fields(lines[r]);
        if (fields.size() != dim + 1) {
            throw ValidationError("inconsistent dimension at row " + std::to_string(r) + " (" +
                                  std::to_string(fields.size() - 1) + " values, expected " +
                                  std::to_string(dim) + ")");
        }
        cs.names.push_back(fields[0]);
        for (std::size_t c = 0; c < dim; ++c) {
            cs.embeddings.at(r - 1, c) = parse_double(fields[c + 1], r, c + 1);
        }
    }
    return cs;
}

ConceptSet load_embeddings_binary(const std::filesystem::path& path) {
    std::string bytes = read_file(path);
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw ValidationError("bad magic in binary tensor file: " + path.string());
    }
    std::uint32_t version = 0;
    std::memcpy(&version, bytes.data() + 4, 4);
    if (version != 1) {
        throw ValidationError("unsupported binary tensor version " + std::to_string(version));
    }
    std::size_t header_end = bytes.find('\n', 8);
    if (header_end == std::string::npos) {
        throw ValidationError("missing header line in binary tensor file: " + path.string());
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(8, header_end - 8));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed binary tensor header: ") + e.what());
    }
    if (!header.contains("n") || !header.contains("d") || !header.contains("dtype") ||
        !header.contains("names")) {
        throw ValidationError("binary tensor header missing n/d/dtype/names");
    }
    const auto n = header["n"].get<std::size_t>();
    const auto d = header["d"].get<std::size_t>();
    const auto dtype = header["dtype"].get<std::string>();
    if (dtype != "f32" && dtype != "f64") {
        throw ValidationError("binary tensor dtype must be f32 or f64, got '" + dtype + "'");
    }
    auto names = header["names"].get<std::vector<std::string>>();
    if (names.size() != n) {
        throw ValidationError("binary tensor header: names length " +
                              std::to_string(names.size()) + " != n " + std::to_string(n));
    }
    const std::size_t value_size = dtype == "f32" ? 4 : 8;
    const std::size_t payload_offset = header_end + 1;
    const std::size_t expected = n * d * value_size;
    if (bytes.size() - payload_offset != expected) {
        throw ValidationError("binary tensor payload size " +
                              std::to_string(bytes.size() - payload_offset) + " != expected " +
                              std::to_string(expected));
    }

    ConceptSet cs;
    cs.names = std::move(names);
    cs.embeddings = Matrix(n, d);
    const char* p = bytes.data() + payload_offset;
    if (dtype == "f64") {
        std::memcpy(cs.embeddings.data(), p, expected);
    } else {
        for (std::size_t i = 0; i < n * d; ++i) {
            float v;
            std::memcpy(&v, p + i * 4, 4);
            cs.embeddings.data()[i] = static_cast<double>(v);
        }
    }
    return cs;
}

} // namespace

ConceptSet load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
    if (format == EmbeddingFormat::auto_detect) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ValidationError("cannot open file: " + path.string());
        char magic[4] = {};
        in.read(magic, 4);
        format = (in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0) ? EmbeddingFormat::binary
                                                                          : EmbeddingFormat::csv;
    }
    ConceptSet cs = format == EmbeddingFormat::binary ? load_embeddings_binary(path)
                                                      : load_embeddings_csv(path);
    validate_concept_set(cs);
    return cs;
}

AttributeLoadResult load_attributes(const std::filesystem::path& path, const ConceptSet& cs) {
    auto lines = split_lines(read_file(path));
    if (lines.empty()) throw ValidationError("empty attributes file: " + path.string());

    auto header = split_fields(lines[0]);
    if (header.size() < 2 || header[0] != "name") {
        throw ValidationError("malformed attributes header (expected 'name,<attr>,...'): " +
                              path.string());
    }
    const std::size_t a_total = header.size() - 1;
    const std::size_t n = lines.size() - 1;

    std::vector<std::string> file_names;
    file_names.reserve(n);
    std::vector<std::vector<std::uint8_t>> cols(a_total, std::vector<std::uint8_t>(n, 0));
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto fields = split_fields(lines[r]);
        if (fields.size() != a_total + 1) {
            throw ValidationError("attributes row " + std::to_string(r) + " has " +
                                  std::to_string(fields.size() - 1) + " cells, expected " +
                                  std::to_string(a_total));
        }
        file_names.push_back(fields[0]);
        for (std::size_t a = 0; a < a_total; ++a) {
            const std::string& f = fields[a + 1];
            if (f == "0") {
                cols[a][r - 1] = 0;
            } else if (f == "1") {
                cols[a][r - 1] = 1;
            } else {
                throw ValidationError("non-binary cell '" + f + "' at row " + std::to_string(r) +
                                      ", column " + std::to_string(a + 2));
            }
        }
    }
    check_name_order(file_names, cs, "attributes file");

    AttributeLoadResult result;
    for (std::size_t a = 0; a < a_total; ++a) {
        std::size_t pos = 0;
        for (std::uint8_t v : cols[a]) pos += v;
        if (pos == 0) {
            result.rejected.push_back({header[a + 1], a, "no positive concept"});
        } else if (pos == n) {
            result.rejected.push_back({header[a + 1], a, "no negative concept"});
        } else {
            result.matrix.names.push_back(header[a + 1]);
            result.matrix.cols.push_back(std::move(cols[a]));
        }
    }
    validate_attribute_matrix(result.matrix, cs.size());
    return result;
}

SupercategoryMap load_supercategories(const std::filesystem::path& path, const ConceptSet& cs) {
    auto lines = split_lines(read_file(path));
    if (lines.empty()) throw ValidationError("empty supercategories file: " + path.string());

    auto header = split_fields(lines[0]);
    if (header.size() != 2 || header[0] != "name" || header[1] != "supercategory") {
        throw ValidationError("malformed supercategories header (expected 'name,supercategory')");
    }

    std::unordered_map<std::string, int> concept_index;
    for (std::size_t i = 0; i < cs.size(); ++i) concept_index[cs.names[i]] = static_cast<int>(i);

    SupercategoryMap sm;
    sm.assignment.assign(cs.size(), -1);
    std::unordered_map<std::string, int> supercat_index;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto fields = split_fields(lines[r]);
        if (fields.size() != 2) {
            throw ValidationError("supercategories row " + std::to_string(r) +
                                  " must have exactly 2 columns");
        }
        auto it = concept_index.find(fields[0]);
        if (it == concept_index.end()) {
            throw ValidationError("unknown concept name '" + fields[0] + "' at row " +
                                  std::to_string(r));
        }
        if (sm.assignment[it->second] != -1) {
            throw ValidationError("duplicate row for concept '" + fields[0] + "' at row " +
                                  std::to_string(r));
        }
        auto [sit, inserted] =
            supercat_index.emplace(fields[1], static_cast<int>(sm.names.size()));
        if (inserted) sm.names.push_back(fields[1]);
        sm.assignment[it->second] = sit->second;
    }
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (sm.assignment[i] == -1) {
            throw ValidationError("uncovered concept '" + cs.names[i] + "' in supercategories file");
        }
    }
    validate_supercategory_map(sm, cs.size());
    return sm;
}

void write_embeddings_csv(const std::filesystem::path& path, const ConceptSet& cs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out << "name";
    for (std::size_t j = 0; j < cs.dim(); ++j) out << ",d" << j;
    out << "\n";
    for (std::size_t i = 0; i < cs.size(); ++i) {
        out << cs.names[i];
        for (std::size_t j = 0; j < cs.dim(); ++j) out << ',' << format_double(cs.embeddings.at(i, j));
        out << "\n";
    }
}

void write_embeddings_binary(const std::filesystem::path& path, const ConceptSet& cs,
                             BinaryDtype dtype) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out.write(kMagic, 4);
    std::uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), 4);
    nlohmann::ordered_json header;
    header["n"] = cs.size();
    header["d"] = cs.dim();
    header["dtype"] = dtype == BinaryDtype::f32 ? "f32" : "f64";
    header["names"] = cs.names;
    std::string header_line = header.dump();
    out.write(header_line.data(), static_cast<std::streamsize>(header_line.size()));
    out.put('\n');
    const std::size_t count = cs.size() * cs.dim();
    if (dtype == BinaryDtype::f64) {
        out.write(reinterpret_cast<const char*>(cs.embeddings.data()),
                  static_cast<std::streamsize>(count * 8));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            float v = static_cast<float>(cs.embeddings.data()[i]);
            out.write(reinterpret_cast<const char*>(&v), 4);
        }
    }
}

void write_attributes_csv(const std::filesystem::path& path, const ConceptSet& cs,
                          const AttributeMatrix& am) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out << "name";
    for (const auto& name : am.names) out << ',' << name;
    out << "\n";
    for (std::size_t i = 0; i < cs.size(); ++i) {
        out << cs.names[i];
        for (std::size_t a = 0; a < am.n_attributes(); ++a) {
            out << ',' << static_cast<int>(am.cols[a][i]);
        }
        out << "\n";
    }
}

void write_supercategories_csv(const std::filesystem::path& path, const ConceptSet& cs,
                               const SupercategoryMap& sm) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out << "name,supercategory\n";
    for (std::size_t i = 0; i < cs.size(); ++i) {
        out << cs.names[i] << ',' << sm.names[sm.assignment[i]] << "\n";
    }
}

} // namespace splitforge
