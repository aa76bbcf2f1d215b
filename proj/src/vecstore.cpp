#include "edusim/vecstore.hpp"

#include "edusim/error.hpp"
#include "edusim/hashing.hpp"
#include "edusim/http.hpp"
#include "edusim/text.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace edusim {

namespace {

constexpr double kNormTolerance = 1e-6;

double l2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

EmbeddingVector EmbeddingVector::normalized(std::vector<double> values) {
  const double n = l2(values);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw ValidationError("cannot normalize a zero or non-finite embedding");
  }
  for (double& x : values) x /= n;
  return EmbeddingVector(std::move(values));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<double> values) {
  const double n = l2(values);
  if (std::abs(n - 1.0) > kNormTolerance) {
    throw ValidationError("embedding is not unit norm (norm " + std::to_string(n) + ")");
  }
  return EmbeddingVector(std::move(values));
}

double EmbeddingVector::norm() const { return l2(values_); }

double EmbeddingVector::dot(const EmbeddingVector& other) const {
  if (other.dim() != dim()) {
    throw DimensionError("dimension mismatch: " + std::to_string(dim()) + " vs " +
                         std::to_string(other.dim()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * other.values_[i];
  return s;
}

EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider) {
  if (text::trim(text).empty()) throw ValidationError("cannot embed empty text");
  auto raw = provider.raw_embed(text);
  if (raw.size() != provider.dimension()) {
    throw DimensionError("provider " + provider.id() + " returned dimension " +
                         std::to_string(raw.size()) + ", expected " +
                         std::to_string(provider.dimension()));
  }
  return EmbeddingVector::normalized(std::move(raw));
}

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw ValidationError("embedding dimension must be positive");
}

std::string HashEmbeddingProvider::id() const {
  return "hash:d" + std::to_string(dim_) + ":s" + std::to_string(seed_);
}

std::vector<double> HashEmbeddingProvider::raw_embed(std::string_view input) const {
  std::vector<double> v(dim_, 0.0);
  const std::uint64_t basis = splitmix64(seed_ ^ 0x5eed5eed5eed5eedULL);
  auto add_feature = [&](std::string_view feature, double weight) {
    const std::uint64_t h = fnv1a64(feature, basis);
    for (std::uint64_t k = 0; k < 4; ++k) {
      const std::uint64_t x = splitmix64(h + k);
      const double sign = (x >> 63) ? -1.0 : 1.0;
      v[(x >> 1) % dim_] += sign * weight;
    }
  };

  const auto tokens = text::word_tokens(input);
  if (tokens.empty()) {
    add_feature(input, 1.0);
  } else {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      add_feature(tokens[i], 1.0);
      if (i + 1 < tokens.size()) add_feature(tokens[i] + " " + tokens[i + 1], 0.5);
    }
  }
  if (l2(v) == 0.0) v[fnv1a64(input, basis) % dim_] = 1.0;
  return v;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(std::shared_ptr<HttpTransport> transport,
                                                 std::string path, std::string model,
                                                 std::size_t dim)
    : transport_(std::move(transport)), path_(std::move(path)), model_(std::move(model)),
      dim_(dim) {}

std::vector<double> RemoteEmbeddingProvider::raw_embed(std::string_view input) const {
  nlohmann::json req = {{"input", std::string(input)}};
  if (!model_.empty()) req["model"] = model_;
  const auto resp = transport_->post_json(path_, req);
  if (resp.status < 200 || resp.status >= 300) {
    throw TransportError("embedding service returned HTTP " + std::to_string(resp.status));
  }
  try {
    const auto j = nlohmann::json::parse(resp.body);
    const auto& arr = j.contains("embedding") ? j.at("embedding") : j.at("data").at(0).at("embedding");
    return arr.get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed embedding response: ") + e.what());
  }
}

void RetrievalParams::validate() const {
  if (!(threshold >= -1.0 && threshold <= 1.0)) {
    throw ValidationError("retrieval threshold must lie in [-1, 1]");
  }
  if (top_k < 1) throw ValidationError("retrieval top_k must be >= 1");
  if (max_content_len < 1) throw ValidationError("max_content_len must be >= 1");
}

VectorStore::VectorStore(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw ValidationError("store dimension must be positive");
}

VectorStore::VectorStore(const VectorStore& other) {
  std::shared_lock lock(other.mutex_);
  dim_ = other.dim_;
  items_ = other.items_;
  by_id_ = other.by_id_;
  next_seq_ = other.next_seq_;
}

VectorStore& VectorStore::operator=(const VectorStore& other) {
  if (this == &other) return *this;
  std::unique_lock mine(mutex_, std::defer_lock);
  std::shared_lock theirs(other.mutex_, std::defer_lock);
  std::lock(mine, theirs);
  dim_ = other.dim_;
  items_ = other.items_;
  by_id_ = other.by_id_;
  next_seq_ = other.next_seq_;
  return *this;
}

std::size_t VectorStore::size() const {
  std::shared_lock lock(mutex_);
  return items_.size();
}

bool VectorStore::contains(std::string_view item_id) const {
  std::shared_lock lock(mutex_);
  return by_id_.count(std::string(item_id)) > 0;
}

std::uint64_t VectorStore::upsert(std::string item_id, std::string content,
                                  EmbeddingVector vector) {
  if (vector.dim() != dim_) {
    throw DimensionError("item '" + item_id + "' has dimension " + std::to_string(vector.dim()) +
                         ", store expects " + std::to_string(dim_));
  }
  std::unique_lock lock(mutex_);
  const std::uint64_t seq = next_seq_++;
  if (auto it = by_id_.find(item_id); it != by_id_.end()) {
    auto& item = items_[it->second];
    item.content = std::move(content);
    item.vector = std::move(vector);
    item.insertion_seq = seq;
  } else {
    by_id_.emplace(item_id, items_.size());
    items_.push_back(IndexedItem{std::move(item_id), std::move(content), std::move(vector), seq});
  }
  return seq;
}

std::vector<Hit> VectorStore::query(const EmbeddingVector& query_vector,
                                    const RetrievalParams& params,
                                    const std::function<bool(std::string_view)>& exclude) const {
  params.validate();
  if (query_vector.dim() != dim_) {
    throw DimensionError("query has dimension " + std::to_string(query_vector.dim()) +
                         ", store expects " + std::to_string(dim_));
  }
  std::shared_lock lock(mutex_);
  struct Scored {
    double score;
    std::uint64_t seq;
    const IndexedItem* item;
  };
  std::vector<Scored> pool;
  for (const auto& item : items_) {
    if (exclude && exclude(item.item_id)) continue;
    const double s = item.vector.dot(query_vector);
    if (s >= params.threshold) pool.push_back({s, item.insertion_seq, &item});
  }
  const std::size_t keep = std::min(params.top_k, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(),
                    [](const Scored& a, const Scored& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.seq < b.seq;
                    });
  std::vector<Hit> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const auto& p = pool[i];
    out.push_back(Hit{p.item->item_id, text::truncate_chars(p.item->content, params.max_content_len),
                      p.score, p.seq});
  }
  return out;
}

std::vector<IndexedItem> VectorStore::items() const {
  std::shared_lock lock(mutex_);
  return items_;
}

}  // namespace edusim
