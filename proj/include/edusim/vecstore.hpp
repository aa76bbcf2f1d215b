#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace edusim {

class HttpTransport;

// Unit-norm embedding. Construction normalizes or verifies the norm.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  // Scales `values` to unit L2 norm. Throws ValidationError on a zero vector.
  static EmbeddingVector normalized(std::vector<double> values);
  // Accepts values already of unit norm (within 1e-6), e.g. from a bank file.
  static EmbeddingVector from_unit(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::span<const double> values() const { return values_; }
  double norm() const;

  // Cosine similarity of two unit vectors. Throws DimensionError on mismatch.
  double dot(const EmbeddingVector& other) const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  explicit EmbeddingVector(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  // Raw (possibly unnormalized) vector for non-empty text.
  virtual std::vector<double> raw_embed(std::string_view text) const = 0;
  virtual std::string id() const = 0;
};

// Validates the text, calls the provider and normalizes the result.
EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider);

// Offline provider: each lowercase word token and adjacent token pair is
// hashed (with the seed) onto a few signed coordinates, then normalized.
class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dim = 256, std::uint64_t seed = 42);
  std::size_t dimension() const override { return dim_; }
  std::vector<double> raw_embed(std::string_view text) const override;
  std::string id() const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// HTTP client for an embedding service: POST {"input": text} and read
// {"embedding": [...]} or OpenAI-style {"data": [{"embedding": [...]}]}.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  RemoteEmbeddingProvider(std::shared_ptr<HttpTransport> transport, std::string path,
                          std::string model, std::size_t dim);
  std::size_t dimension() const override { return dim_; }
  std::vector<double> raw_embed(std::string_view text) const override;
  std::string id() const override { return "remote:" + model_; }

 private:
  std::shared_ptr<HttpTransport> transport_;
  std::string path_;
  std::string model_;
  std::size_t dim_;
};

struct RetrievalParams {
  double threshold = 0.7;
  std::size_t top_k = 1;
  std::size_t max_content_len = 800;

  void validate() const;
  friend bool operator==(const RetrievalParams&, const RetrievalParams&) = default;
};

struct IndexedItem {
  std::string item_id;
  std::string content;
  EmbeddingVector vector;
  std::uint64_t insertion_seq = 0;  // assigned by the store
};

struct Hit {
  std::string item_id;
  std::string content;  // truncated to max_content_len characters
  double score = 0.0;
  std::uint64_t insertion_seq = 0;
};

// Exact cosine index. Queries take a shared lock; upserts take an exclusive one.
class VectorStore {
 public:
  explicit VectorStore(std::size_t dim);

  VectorStore(const VectorStore& other);
  VectorStore& operator=(const VectorStore& other);

  std::size_t dim() const { return dim_; }
  std::size_t size() const;
  bool contains(std::string_view item_id) const;

  // Inserts or replaces by item_id; a replaced item gets a fresh insertion_seq.
  // Returns the assigned insertion_seq.
  std::uint64_t upsert(std::string item_id, std::string content, EmbeddingVector vector);

  // Items with score >= threshold, by score descending then insertion_seq
  // ascending, cut to top_k. `exclude` drops items before the cut.
  std::vector<Hit> query(const EmbeddingVector& query_vector, const RetrievalParams& params,
                         const std::function<bool(std::string_view)>& exclude = {}) const;

  // Snapshot of all items in storage order.
  std::vector<IndexedItem> items() const;

 private:
  std::size_t dim_;
  std::vector<IndexedItem> items_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::uint64_t next_seq_ = 1;
  mutable std::shared_mutex mutex_;
};

}  // namespace edusim
