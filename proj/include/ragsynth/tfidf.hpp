/// @file tfidf.hpp
/// @brief Local TF-IDF vectorization. Backs the distractor similarity scorer,
///        the coverage metric, and the gateway's offline embedding fallback.
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace ragsynth::tfidf {

struct Options {
    int ngram_min = 1;
    int ngram_max = 1;
    bool l2_normalize = true;
};

// Word n-grams over normalized tokens, joined with single spaces.
std::vector<std::string> ngrams(const std::string& doc, int nmin, int nmax);

// Smooth idf: ln((1 + n_docs) / (1 + df)) + 1. Vocabulary is sorted, so vector
// layout is deterministic for a given corpus.
class TfidfVectorizer {
public:
    explicit TfidfVectorizer(Options opts = {}) : opts_(opts) {}

    void fit(const std::vector<std::string>& docs);
    bool fitted() const { return !vocab_.empty() || n_docs_ > 0; }
    std::size_t dimension() const { return vocab_.size(); }

    // Dense tf*idf vector over the fitted vocabulary; out-of-vocabulary terms
    // are dropped, so a document sharing no vocabulary maps to the zero vector.
    std::vector<double> transform(const std::string& doc) const;

    const std::map<std::string, std::size_t>& vocabulary() const { return vocab_; }

private:
    Options opts_;
    std::map<std::string, std::size_t> vocab_;
    std::vector<double> idf_;
    std::size_t n_docs_ = 0;
};

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm(const std::vector<double>& v);

// Cosine similarity; 0 when either vector is zero.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

std::vector<double> centroid(const std::vector<std::vector<double>>& vectors);

}  // namespace ragsynth::tfidf
