#include "ragsynth/tfidf.hpp"

#include <cmath>
#include <set>

#include "ragsynth/common.hpp"
#include "ragsynth/text.hpp"

namespace ragsynth::tfidf {

std::vector<std::string> ngrams(const std::string& doc, int nmin, int nmax) {
    auto tokens = text::normalize_tokens(doc);
    std::vector<std::string> grams;
    for (int n = nmin; n <= nmax; ++n) {
        if (n <= 0 || tokens.size() < static_cast<std::size_t>(n)) continue;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string g = tokens[i];
            for (int j = 1; j < n; ++j) {
                g += ' ';
                g += tokens[i + j];
            }
            grams.push_back(std::move(g));
        }
    }
    return grams;
}

void TfidfVectorizer::fit(const std::vector<std::string>& docs) {
    vocab_.clear();
    idf_.clear();
    n_docs_ = docs.size();

    std::map<std::string, std::size_t> df;
    for (const auto& doc : docs) {
        std::set<std::string> uniq;
        for (auto& g : ngrams(doc, opts_.ngram_min, opts_.ngram_max)) uniq.insert(std::move(g));
        for (const auto& g : uniq) ++df[g];
    }
    std::size_t index = 0;
    for (const auto& [term, count] : df) {
        vocab_.emplace(term, index++);
        idf_.push_back(std::log((1.0 + static_cast<double>(n_docs_)) /
                                (1.0 + static_cast<double>(count))) +
                       1.0);
    }
}

std::vector<double> TfidfVectorizer::transform(const std::string& doc) const {
    if (n_docs_ == 0) throw DataError("TfidfVectorizer used before fit()");
    std::vector<double> v(vocab_.size(), 0.0);
    for (const auto& g : ngrams(doc, opts_.ngram_min, opts_.ngram_max)) {
        auto it = vocab_.find(g);
        if (it != vocab_.end()) v[it->second] += 1.0;
    }
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= idf_[i];
    if (opts_.l2_normalize) {
        double n = norm(v);
        if (n > 0)
            for (auto& x : v) x /= n;
    }
    return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double norm(const std::vector<double>& v) {
    return std::sqrt(dot(v, v));
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

std::vector<double> centroid(const std::vector<std::vector<double>>& vectors) {
    if (vectors.empty()) return {};
    std::vector<double> c(vectors.front().size(), 0.0);
    for (const auto& v : vectors)
        for (std::size_t i = 0; i < c.size(); ++i) c[i] += v[i];
    for (auto& x : c) x /= static_cast<double>(vectors.size());
    return c;
}

}  // namespace ragsynth::tfidf
