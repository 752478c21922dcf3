#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scnn/error.hpp"
#include "scnn/rng.hpp"
#include "scnn/tensor.hpp"

namespace scnn {

namespace fs = std::filesystem;

using Tokens = std::vector<std::string>;
using TokenIds = std::vector<std::int32_t>;

// ---- tokenizer ------------------------------------------------------------

inline bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
inline bool is_ascii_punct(unsigned char c) {
    return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

/// Lowercases ASCII letters, splits on whitespace and emits every ASCII
/// punctuation character as its own token. Non-ASCII bytes are word bytes.
/// Nothing is removed, stopwords included.
inline Tokens tokenize(std::string_view text) {
    Tokens out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_ascii_space(c)) {
            flush();
        } else if (is_ascii_punct(c)) {
            flush();
            out.emplace_back(1, ch);
        } else {
            cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
        }
    }
    flush();
    return out;
}

// ---- vocabulary -----------------------------------------------------------

class Vocabulary {
public:
    static constexpr std::int32_t pad_id = 0;
    static constexpr const char* pad_token = "<pad>";

    Vocabulary() : words_{pad_token} {}

    /// Build from an id-ordered word list whose first entry is the pad token.
    static Vocabulary from_words(std::vector<std::string> words) {
        if (words.empty() || words.front() != pad_token)
            throw FormatError("vocabulary must start with the pad token");
        Vocabulary v;
        v.words_.clear();
        for (auto& w : words) v.add(std::move(w));
        return v;
    }

    std::size_t size() const noexcept { return words_.size(); }
    const std::string& word(std::int32_t id) const { return words_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::string>& words() const noexcept { return words_; }

    std::optional<std::int32_t> find(const std::string& w) const {
        auto it = index_.find(w);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    void add(std::string w) {
        if (index_.count(w)) throw FormatError("duplicate vocabulary entry '" + w + "'");
        const auto id = static_cast<std::int32_t>(words_.size());
        if (!(words_.empty() && w == pad_token)) index_.emplace(w, id);
        words_.push_back(std::move(w));
    }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::int32_t> index_;
};

/// Keeps the `max_size - 1` most frequent words (ties in byte order) after the
/// pad entry at id 0.
inline Vocabulary build_vocab(const std::vector<Tokens>& corpus, std::size_t max_size) {
    if (max_size < 2) throw InvalidInput("vocabulary size must be at least 2");
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& sent : corpus)
        for (const auto& t : sent) ++counts[t];
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > max_size - 1) ranked.resize(max_size - 1);
    Vocabulary v;
    for (auto& [w, _] : ranked) v.add(w);
    return v;
}

/// Exactly `max_len` ids: head-truncated, right-padded with pad_id; unknown
/// words also map to pad_id.
inline TokenIds encode(const Tokens& tokens, const Vocabulary& vocab, std::size_t max_len) {
    if (max_len == 0) throw InvalidInput("encode length must be positive");
    TokenIds ids(max_len, Vocabulary::pad_id);
    const std::size_t n = std::min(tokens.size(), max_len);
    for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.find(tokens[i]).value_or(Vocabulary::pad_id);
    return ids;
}

/// Inverse of encode up to padding: pad ids are skipped.
inline Tokens decode(const TokenIds& ids, const Vocabulary& vocab) {
    Tokens out;
    for (auto id : ids)
        if (id != Vocabulary::pad_id) out.push_back(vocab.word(id));
    return out;
}

/// FNV-1a over the "word TAB id" export lines, as 16 hex digits.
inline std::string vocab_hash(const Vocabulary& v) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    for (std::size_t i = 0; i < v.size(); ++i) {
        feed(v.words()[i]);
        feed("\t");
        feed(std::to_string(i));
        feed("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline void write_vocab(const Vocabulary& v, const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write vocabulary file " + path.string());
    for (std::size_t i = 0; i < v.size(); ++i) os << v.words()[i] << '\t' << i << '\n';
}

inline Vocabulary read_vocab(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot read vocabulary file " + path.string());
    std::vector<std::string> words;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.rfind('\t');
        std::size_t id = 0;
        const char* end = line.data() + line.size();
        if (tab == std::string::npos ||
            std::from_chars(line.data() + tab + 1, end, id).ptr != end || id != words.size())
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected 'word TAB id' in id order");
        words.push_back(line.substr(0, tab));
    }
    return Vocabulary::from_words(std::move(words));
}

// ---- embeddings -----------------------------------------------------------

struct EmbeddingTable {
    Tensor matrix; // [V x d]
    std::size_t dim = 0;
    double coverage = 0.0;   // fraction of non-pad words found
    std::size_t found = 0;
};

enum class EmbeddingFormat { text, binary, random };

inline EmbeddingFormat parse_embedding_format(const std::string& s) {
    if (s == "text") return EmbeddingFormat::text;
    if (s == "binary") return EmbeddingFormat::binary;
    if (s == "random") return EmbeddingFormat::random;
    throw ConfigError("unknown embedding format '" + s + "' (valid: text, binary, random)");
}

namespace detail {

inline EmbeddingTable finish_table(Tensor m, std::size_t dim, std::size_t found, const Vocabulary& vocab) {
    EmbeddingTable t;
    t.matrix = std::move(m);
    t.dim = dim;
    t.found = found;
    t.coverage = vocab.size() > 1 ? static_cast<double>(found) / static_cast<double>(vocab.size() - 1) : 0.0;
    return t;
}

inline bool parse_double(std::string_view s, double& out) {
    auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc{} && r.ptr == s.data() + s.size();
}

inline bool parse_size(std::string_view s, std::size_t& out) {
    auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc{} && r.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_ascii_space(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !is_ascii_space(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

} // namespace detail

/// Whitespace-separated "word v1 ... vd" per line, optional "count dim" header.
/// `dim` = 0 infers the dimension from the first record.
inline EmbeddingTable load_text_embeddings(const fs::path& path, const Vocabulary& vocab, std::size_t dim) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open embedding file " + path.string());
    std::optional<Tensor> m;
    std::vector<std::uint8_t> filled(vocab.size(), 0);
    std::size_t found = 0;
    std::string line;
    std::size_t lineno = 0;
    auto loc = [&] { return path.string() + ":" + std::to_string(lineno); };
    auto ensure = [&](std::size_t d) {
        if (dim != 0 && d != dim)
            throw FormatError(loc() + ": embedding dimension " + std::to_string(d) + " does not match expected " +
                              std::to_string(dim));
        dim = d;
        m.emplace(Shape{vocab.size(), dim});
    };
    while (std::getline(is, line)) {
        ++lineno;
        auto fields = detail::split_ws(line);
        if (fields.empty()) continue;
        if (lineno == 1 && fields.size() == 2) {
            std::size_t count = 0, d = 0;
            if (detail::parse_size(fields[0], count) && detail::parse_size(fields[1], d)) {
                ensure(d);
                continue;
            }
        }
        if (fields.size() < 2) throw ParseError(loc() + ": record has no vector values");
        if (!m) ensure(fields.size() - 1);
        if (fields.size() - 1 != dim)
            throw FormatError(loc() + ": record has " + std::to_string(fields.size() - 1) + " values, expected " +
                              std::to_string(dim));
        const auto id = vocab.find(std::string(fields[0]));
        std::vector<double> vals(dim);
        for (std::size_t k = 0; k < dim; ++k)
            if (!detail::parse_double(fields[k + 1], vals[k]))
                throw ParseError(loc() + ": malformed value '" + std::string(fields[k + 1]) + "'");
        if (!id || filled[static_cast<std::size_t>(*id)]) continue; // first occurrence wins
        filled[static_cast<std::size_t>(*id)] = 1;
        ++found;
        std::copy(vals.begin(), vals.end(), m->data().begin() + static_cast<std::ptrdiff_t>(*id * dim));
    }
    if (!m) throw ParseError(path.string() + ": no embedding records");
    return detail::finish_table(std::move(*m), dim, found, vocab);
}

/// word2vec binary layout: "count dim\n" then per record the word bytes, one
/// space, and dim little-endian float32 values. A newline between records is
/// tolerated.
inline EmbeddingTable load_binary_embeddings(const fs::path& path, const Vocabulary& vocab, std::size_t dim) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open embedding file " + path.string());
    std::string header;
    if (!std::getline(is, header)) throw ParseError(path.string() + ": missing header");
    auto hf = detail::split_ws(header);
    std::size_t count = 0, d = 0;
    if (hf.size() != 2 || !detail::parse_size(hf[0], count) || !detail::parse_size(hf[1], d) || d == 0)
        throw ParseError(path.string() + ": offset 0: header must be 'count dim'");
    if (dim != 0 && d != dim)
        throw FormatError(path.string() + ": embedding dimension " + std::to_string(d) + " does not match expected " +
                          std::to_string(dim));
    dim = d;
    Tensor m({vocab.size(), dim});
    std::vector<std::uint8_t> filled(vocab.size(), 0);
    std::size_t found = 0;
    std::vector<unsigned char> raw(dim * 4);
    std::string word;
    for (std::size_t rec = 0; rec < count; ++rec) {
        word.clear();
        int c;
        while ((c = is.get()) == '\n' || c == '\r') {}
        while (c != EOF && c != ' ') {
            word.push_back(static_cast<char>(c));
            c = is.get();
        }
        if (c == EOF || word.empty())
            throw ParseError(path.string() + ": offset " + std::to_string(static_cast<long long>(is.tellg())) +
                             ": truncated record " + std::to_string(rec));
        const auto offset = static_cast<long long>(is.tellg());
        if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
            throw ParseError(path.string() + ": offset " + std::to_string(offset) + ": truncated vector for '" +
                             word + "'");
        const auto id = vocab.find(word);
        if (!id || filled[static_cast<std::size_t>(*id)]) continue;
        filled[static_cast<std::size_t>(*id)] = 1;
        ++found;
        double* row = m.data().data() + static_cast<std::size_t>(*id) * dim;
        for (std::size_t k = 0; k < dim; ++k) {
            const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * k]) |
                                       (static_cast<std::uint32_t>(raw[4 * k + 1]) << 8) |
                                       (static_cast<std::uint32_t>(raw[4 * k + 2]) << 16) |
                                       (static_cast<std::uint32_t>(raw[4 * k + 3]) << 24);
            float f;
            std::memcpy(&f, &bits, sizeof f);
            row[k] = static_cast<double>(f);
        }
    }
    return detail::finish_table(std::move(m), dim, found, vocab);
}

/// Seeded random vectors, uniform on [-scale, scale], for every non-pad word.
inline EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, double scale, Rng& rng) {
    if (dim == 0) throw ConfigError("random embeddings need a positive dimension");
    Tensor m({vocab.size(), dim});
    std::uniform_real_distribution<double> u(-scale, scale);
    for (std::size_t i = dim; i < m.size(); ++i) m[i] = u(rng);
    return detail::finish_table(std::move(m), dim, vocab.size() - 1, vocab);
}

inline void write_binary_embeddings(const fs::path& path, const std::vector<std::pair<std::string, std::vector<float>>>& recs,
                                    std::size_t dim) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path.string());
    os << recs.size() << ' ' << dim << '\n';
    for (const auto& [w, v] : recs) {
        if (v.size() != dim) throw DimensionError("record dimension mismatch for '" + w + "'");
        os << w << ' ';
        for (float f : v) {
            std::uint32_t bits;
            std::memcpy(&bits, &f, sizeof bits);
            const unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                        static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
            os.write(reinterpret_cast<const char*>(b), 4);
        }
        os << '\n';
    }
}

// ---- datasets -------------------------------------------------------------

enum class Split { train, test };

struct Example {
    Tokens tokens;
    int label = 0;
    Split split = Split::train;
};

struct Dataset {
    std::vector<Example> examples;
    std::vector<std::string> class_names;
    bool predefined_split = false;

    std::size_t num_classes() const noexcept { return class_names.size(); }
    std::size_t size() const noexcept { return examples.size(); }

    std::vector<std::size_t> indices(Split s) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < examples.size(); ++i)
            if (examples[i].split == s) out.push_back(i);
        return out;
    }

    void validate() const {
        if (examples.empty()) throw DataError("dataset is empty");
        for (const auto& e : examples)
            if (e.label < 0 || static_cast<std::size_t>(e.label) >= class_names.size())
                throw DataError("label " + std::to_string(e.label) + " has no class name");
    }
};

enum class Layout { tsv, pair_of_files, labeled_prefix, directory_per_class };

inline Layout parse_layout(const std::string& s) {
    if (s == "tsv") return Layout::tsv;
    if (s == "pair-of-files") return Layout::pair_of_files;
    if (s == "labeled-prefix") return Layout::labeled_prefix;
    if (s == "directory-per-class") return Layout::directory_per_class;
    throw ConfigError("unknown dataset layout '" + s +
                      "' (valid: tsv, pair-of-files, labeled-prefix, directory-per-class)");
}

struct DatasetSource {
    std::string path;       // file, directory, or comma-separated file list
    Layout layout = Layout::tsv;
    std::string test_path;  // optional predefined test portion, same layout
    std::vector<std::string> classes; // optional explicit class list
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

struct RawLine {
    std::string text;
    std::size_t lineno;
};

inline std::vector<RawLine> read_lines(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw DataError("cannot read " + p.string());
    std::vector<RawLine> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        out.push_back({std::move(line), n});
    }
    if (out.empty()) throw DataError(p.string() + ": file contains no examples");
    return out;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw DataError("cannot read " + p.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct Labeled {
    std::string label;
    std::string text;
    Split split;
};

inline void parse_labeled_file(const fs::path& p, Layout layout, Split split, std::vector<Labeled>& out) {
    for (auto& [line, n] : read_lines(p)) {
        if (layout == Layout::tsv) {
            const auto tab = line.find('\t');
            if (tab == std::string::npos || tab == 0)
                throw DataError(p.string() + ":" + std::to_string(n) + ": expected 'label TAB text'");
            out.push_back({line.substr(0, tab), line.substr(tab + 1), split});
        } else {
            const auto space = line.find(' ');
            const auto head = line.substr(0, space);
            const auto colon = head.find(':');
            if (colon == std::string::npos || colon == 0)
                throw DataError(p.string() + ":" + std::to_string(n) + ": expected 'CLASS:fine text'");
            out.push_back({head.substr(0, colon), space == std::string::npos ? "" : line.substr(space + 1), split});
        }
    }
}

inline std::vector<fs::path> list_sorted(const fs::path& dir, bool want_dirs) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.empty() || name[0] == '.') continue;
        if (want_dirs ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<fs::path> file_list(const std::string& spec) {
    if (fs::is_directory(spec)) return list_sorted(spec, false);
    std::vector<fs::path> out;
    for (auto& s : split_list(spec)) out.emplace_back(s);
    return out;
}

inline void load_class_dirs(const fs::path& root, const std::vector<std::string>& classes, Split split,
                            Dataset& ds) {
    const auto dirs = list_sorted(root, true);
    std::vector<fs::path> use;
    if (classes.empty()) {
        use = dirs;
    } else {
        for (auto& c : classes) {
            if (!fs::is_directory(root / c)) throw DataError("missing class directory " + (root / c).string());
            use.push_back(root / c);
        }
    }
    for (const auto& dir : use) {
        const auto name = dir.filename().string();
        auto it = std::find(ds.class_names.begin(), ds.class_names.end(), name);
        int label;
        if (it != ds.class_names.end()) {
            label = static_cast<int>(it - ds.class_names.begin());
        } else if (split == Split::train) {
            label = static_cast<int>(ds.class_names.size());
            ds.class_names.push_back(name);
        } else {
            throw DataError("unknown class directory " + dir.string());
        }
        const auto files = list_sorted(dir, false);
        if (files.empty()) throw DataError("class directory has no examples: " + dir.string());
        for (const auto& f : files) ds.examples.push_back({tokenize(read_file(f)), label, split});
    }
}

} // namespace detail

/// Read a labeled corpus. Example order is file order, then line order.
inline Dataset load_dataset(const DatasetSource& src) {
    Dataset ds;
    switch (src.layout) {
    case Layout::tsv:
    case Layout::labeled_prefix: {
        std::vector<detail::Labeled> rows;
        detail::parse_labeled_file(src.path, src.layout, Split::train, rows);
        if (!src.test_path.empty()) detail::parse_labeled_file(src.test_path, src.layout, Split::test, rows);
        if (src.classes.empty()) {
            std::set<std::string> names;
            for (auto& r : rows) names.insert(r.label);
            ds.class_names.assign(names.begin(), names.end());
        } else {
            ds.class_names = src.classes;
        }
        for (auto& r : rows) {
            auto it = std::find(ds.class_names.begin(), ds.class_names.end(), r.label);
            if (it == ds.class_names.end()) throw DataError("unknown class label '" + r.label + "'");
            ds.examples.push_back({tokenize(r.text), static_cast<int>(it - ds.class_names.begin()), r.split});
        }
        ds.predefined_split = !src.test_path.empty();
        break;
    }
    case Layout::pair_of_files: {
        const auto files = detail::file_list(src.path);
        if (files.size() < 2) throw DataError("pair-of-files layout needs one file per class (at least two)");
        if (!src.classes.empty() && src.classes.size() != files.size())
            throw DataError("class list does not match the number of class files");
        for (std::size_t c = 0; c < files.size(); ++c) {
            ds.class_names.push_back(src.classes.empty() ? files[c].filename().string() : src.classes[c]);
            for (auto& l : detail::read_lines(files[c]))
                ds.examples.push_back({tokenize(l.text), static_cast<int>(c), Split::train});
        }
        if (!src.test_path.empty()) {
            const auto tfiles = detail::file_list(src.test_path);
            if (tfiles.size() != files.size()) throw DataError("test files do not match the class files");
            for (std::size_t c = 0; c < tfiles.size(); ++c)
                for (auto& l : detail::read_lines(tfiles[c]))
                    ds.examples.push_back({tokenize(l.text), static_cast<int>(c), Split::test});
            ds.predefined_split = true;
        }
        break;
    }
    case Layout::directory_per_class: {
        const fs::path root(src.path);
        if (fs::is_directory(root / "train") && fs::is_directory(root / "test")) {
            detail::load_class_dirs(root / "train", src.classes, Split::train, ds);
            detail::load_class_dirs(root / "test", src.classes, Split::test, ds);
            ds.predefined_split = true;
        } else {
            detail::load_class_dirs(root, src.classes, Split::train, ds);
            if (!src.test_path.empty()) {
                detail::load_class_dirs(src.test_path, src.classes, Split::test, ds);
                ds.predefined_split = true;
            }
        }
        break;
    }
    }
    ds.validate();
    return ds;
}

inline Dataset load_dataset(const std::string& path, Layout layout) { return load_dataset(DatasetSource{path, layout, {}, {}}); }

} // namespace scnn
