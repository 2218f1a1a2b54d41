#include "sgnlg/sentence_encoder.hpp"

#include <cstring>
#include <fstream>

#include "sgnlg/schema.hpp"

namespace sgnlg {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Pooling pooling_from_name(const std::string& name) {
    if (name == "mean") return Pooling::kMean;
    if (name == "first") return Pooling::kFirst;
    throw std::invalid_argument("unknown pooling: " + name);
}

std::string pooling_name(Pooling p) { return p == Pooling::kMean ? "mean" : "first"; }

HashedSentenceEncoder::HashedSentenceEncoder(int dim, Pooling pooling, std::uint64_t seed)
    : dim_(dim), pooling_(pooling), seed_(seed) {
    if (dim <= 0) throw std::invalid_argument("encoder dim must be positive");
}

std::vector<double> HashedSentenceEncoder::token_vector(const std::string& token) const {
    std::vector<double> v(dim_);
    std::uint64_t state = splitmix64(seed_ ^ fnv1a64(token));
    for (int i = 0; i < dim_; ++i) {
        state = splitmix64(state);
        // Map to [-1, 1); 53 mantissa bits keep the draw exact.
        double u = static_cast<double>(state >> 11) * (1.0 / 9007199254740992.0);
        v[i] = 2.0 * u - 1.0;
    }
    return v;
}

std::vector<std::vector<double>> HashedSentenceEncoder::encode_tokens(
    const std::string& text) const {
    std::vector<std::vector<double>> out;
    for (const auto& token : tokenize(text)) out.push_back(token_vector(token));
    return out;
}

std::vector<double> HashedSentenceEncoder::encode(const std::string& text) const {
    auto tokens = encode_tokens(text);
    std::vector<double> pooled(dim_, 0.0);
    if (tokens.empty()) return pooled;
    if (pooling_ == Pooling::kFirst) return tokens.front();
    for (const auto& t : tokens)
        for (int i = 0; i < dim_; ++i) pooled[i] += t[i];
    for (int i = 0; i < dim_; ++i) pooled[i] /= static_cast<double>(tokens.size());
    return pooled;
}

std::string HashedSentenceEncoder::name() const {
    return "hashed-" + std::to_string(dim_) + "-" + pooling_name(pooling_);
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'S', 'G', 'E', 'M', 'B', '0', '1', '\n'};

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}
template <typename T>
bool read_raw(std::istream& in, T& value) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    return static_cast<bool>(in);
}
}  // namespace

EmbeddingCache::Key EmbeddingCache::key_of(const std::string& text) {
    return {fnv1a64(text), static_cast<std::uint32_t>(text.size())};
}

EmbeddingCache EmbeddingCache::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open embedding cache: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("bad embedding cache header: " + path);
    std::uint32_t dim = 0;
    std::uint64_t count = 0;
    if (!read_raw(in, dim) || !read_raw(in, count))
        throw std::runtime_error("truncated embedding cache: " + path);
    EmbeddingCache cache(static_cast<int>(dim));
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint64_t hash = 0;
        std::uint32_t len = 0;
        if (!read_raw(in, hash) || !read_raw(in, len))
            throw std::runtime_error("truncated embedding cache: " + path);
        std::vector<double> vec(dim);
        in.read(reinterpret_cast<char*>(vec.data()),
                static_cast<std::streamsize>(sizeof(double) * dim));
        if (!in) throw std::runtime_error("truncated embedding cache: " + path);
        cache.entries_[{hash, len}] = std::move(vec);
    }
    return cache;
}

void EmbeddingCache::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write embedding cache: " + path);
    out.write(kMagic, 8);
    write_raw(out, static_cast<std::uint32_t>(dim_));
    write_raw(out, static_cast<std::uint64_t>(entries_.size()));
    for (const auto& [key, vec] : entries_) {
        write_raw(out, key.first);
        write_raw(out, key.second);
        out.write(reinterpret_cast<const char*>(vec.data()),
                  static_cast<std::streamsize>(sizeof(double) * vec.size()));
    }
}

bool EmbeddingCache::has(const std::string& text) const { return entries_.count(key_of(text)); }

const std::vector<double>* EmbeddingCache::find(const std::string& text) const {
    auto it = entries_.find(key_of(text));
    return it == entries_.end() ? nullptr : &it->second;
}

void EmbeddingCache::put(const std::string& text, const std::vector<double>& vec) {
    if (dim_ == 0) dim_ = static_cast<int>(vec.size());
    if (static_cast<int>(vec.size()) != dim_)
        throw std::invalid_argument("embedding width differs from cache width");
    entries_[key_of(text)] = vec;
}

// ---------------------------------------------------------------------------

CachingSentenceEncoder::CachingSentenceEncoder(std::shared_ptr<SentenceEncoder> inner,
                                               EmbeddingCache cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
    if (!inner_ && cache_.dim() == 0)
        throw std::invalid_argument("cache-only encoder needs a non-empty cache");
    if (inner_ && cache_.dim() != 0 && inner_->dim() != cache_.dim())
        throw std::invalid_argument("encoder and cache widths differ");
}

int CachingSentenceEncoder::dim() const { return inner_ ? inner_->dim() : cache_.dim(); }

std::vector<double> CachingSentenceEncoder::encode(const std::string& text) const {
    if (const auto* hit = cache_.find(text)) return *hit;
    if (!inner_)
        throw EncoderUnavailableError("no encoder available and text missing from cache: \"" +
                                      text + "\"");
    auto vec = inner_->encode(text);
    cache_.put(text, vec);
    return vec;
}

std::vector<std::vector<double>> CachingSentenceEncoder::encode_tokens(
    const std::string& text) const {
    if (!inner_)
        throw EncoderUnavailableError("token-level encoding requires a live encoder");
    return inner_->encode_tokens(text);
}

std::string CachingSentenceEncoder::name() const {
    return inner_ ? "cached(" + inner_->name() + ")" : "cache-only";
}

}  // namespace sgnlg
