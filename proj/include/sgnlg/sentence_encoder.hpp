#pragma once

// Frozen sentence embeddings for schema descriptions and NL-MRs. The
// deterministic hashed encoder stands in for a large pretrained encoder so
// runs are reproducible offline; embeddings are cached on disk keyed by a
// hash of the text, and a cache-only mode serves previously computed vectors
// when no encoder is available.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgnlg {

class EncoderUnavailableError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Pooling { kMean, kFirst };

Pooling pooling_from_name(const std::string& name);
std::string pooling_name(Pooling p);

class SentenceEncoder {
  public:
    virtual ~SentenceEncoder() = default;
    virtual int dim() const = 0;
    // Pooled sentence vector; the empty string pools an empty token
    // sequence and yields zeros.
    virtual std::vector<double> encode(const std::string& text) const = 0;
    // One vector per token of tokenize(text).
    virtual std::vector<std::vector<double>> encode_tokens(const std::string& text) const = 0;
    virtual std::string name() const = 0;
};

// Deterministic per-token vectors derived from a 64-bit hash of the token;
// pooling combines them into the sentence vector. No I/O, no model weights.
class HashedSentenceEncoder : public SentenceEncoder {
  public:
    explicit HashedSentenceEncoder(int dim = 64, Pooling pooling = Pooling::kMean,
                                   std::uint64_t seed = 0x5347454d42ULL);
    int dim() const override { return dim_; }
    std::vector<double> encode(const std::string& text) const override;
    std::vector<std::vector<double>> encode_tokens(const std::string& text) const override;
    std::string name() const override;

    std::vector<double> token_vector(const std::string& token) const;

  private:
    int dim_;
    Pooling pooling_;
    std::uint64_t seed_;
};

// Binary on-disk embedding cache. Layout: 8-byte magic "SGEMB01\n",
// uint32 dim, uint64 entry count, then per entry uint64 text hash,
// uint32 text length, dim doubles. Little-endian, doubles raw.
class EmbeddingCache {
  public:
    EmbeddingCache() = default;
    explicit EmbeddingCache(int dim) : dim_(dim) {}

    static EmbeddingCache load(const std::string& path);
    void save(const std::string& path) const;

    bool has(const std::string& text) const;
    const std::vector<double>* find(const std::string& text) const;
    void put(const std::string& text, const std::vector<double>& vec);

    int dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }

  private:
    using Key = std::pair<std::uint64_t, std::uint32_t>;  // (hash, length)
    static Key key_of(const std::string& text);
    int dim_ = 0;
    std::map<Key, std::vector<double>> entries_;
};

// Wraps an encoder with a cache. A null inner encoder makes the cache the
// only source; a miss then raises EncoderUnavailableError.
class CachingSentenceEncoder : public SentenceEncoder {
  public:
    CachingSentenceEncoder(std::shared_ptr<SentenceEncoder> inner, EmbeddingCache cache);

    int dim() const override;
    std::vector<double> encode(const std::string& text) const override;
    std::vector<std::vector<double>> encode_tokens(const std::string& text) const override;
    std::string name() const override;

    const EmbeddingCache& cache() const { return cache_; }
    void save_cache(const std::string& path) const { cache_.save(path); }

  private:
    std::shared_ptr<SentenceEncoder> inner_;
    mutable EmbeddingCache cache_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace sgnlg
