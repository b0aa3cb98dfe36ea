#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gvs/embedding.hpp"

namespace gvs {

/// Strips a trailing ".meta.json", ".f32" or ".ids" so that any member of an
/// embedding file set names the whole set.
std::filesystem::path embedding_base(const std::filesystem::path& path);

/// Reads <base>.meta.json, <base>.f32 and, when present, <base>.ids.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

/// Writes the file set; values are stored as little-endian 32-bit floats.
/// The .ids file is written only when the ids differ from "0".."N-1".
void save_embeddings(const EmbeddingMatrix& x, const std::filesystem::path& path);

/// Rounds every entry to the nearest 32-bit float (what a save/load cycle does).
Matrix round_to_f32(const Matrix& m);

/// (condition row, target row)
using IndexPair = std::pair<std::size_t, std::size_t>;

/// Pair file: one "condition_index<TAB>target_index" line per pair. Blank
/// lines and lines starting with '#' are ignored.
std::vector<IndexPair> load_pairs(const std::filesystem::path& path);
void save_pairs(const std::vector<IndexPair>& pairs, const std::filesystem::path& path);

/// query id -> doc id -> relevance
using QrelSet = std::map<std::string, std::map<std::string, int>>;

/// TSV "query_id<TAB>doc_id<TAB>relevance".
QrelSet load_qrels(const std::filesystem::path& path);

struct RunEntry {
    std::string query_id;
    std::size_t rank = 0;
    std::string doc_id;
    double score = 0;
};

/// TSV "query_id<TAB>rank<TAB>doc_id<TAB>score".
std::vector<RunEntry> load_run(const std::filesystem::path& path);
std::string format_run(const std::vector<RunEntry>& run);

/// Newline-separated labels, one per row.
std::vector<std::string> load_labels(const std::filesystem::path& path);

std::vector<std::string> split_tabs(const std::string& line);

}  // namespace gvs
