#pragma once

#include "midicls/classifier.hpp"
#include "midicls/evalkit.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace midicls {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
// FNV-1a 64 of the file bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

// Token corpus: one piece per line. Item ids live in "<path>.ids", one per
// line; without that file ids default to "<file name>:<line number>".
std::vector<IdentifiedPiece> read_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<IdentifiedPiece>& pieces);
std::string corpus_ids_path(const std::string& corpus_path);

// Header "id,f0,...,f{H-1}", full round-trip precision.
void write_features_csv(const std::string& path, const std::vector<FeatureVector>& features);
std::vector<FeatureVector> read_features_csv(const std::string& path);

std::string csv_field(const std::string& text);

} // namespace midicls
