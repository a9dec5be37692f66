#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace tokengraft {

enum class MatrixRole { kInput, kOutput };

// Row-major f32 matrix with one row per token.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim, MatrixRole role = MatrixRole::kInput);
  // Throws InputError if data.size() != rows * dim.
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                  MatrixRole role = MatrixRole::kInput);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  MatrixRole role() const noexcept { return role_; }
  void set_role(MatrixRole role) noexcept { role_ = role; }

  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  const std::vector<float>& data() const noexcept { return data_; }
  std::vector<float>& data() noexcept { return data_; }

  bool all_finite() const;

  // Bitwise equality of every entry (distinguishes -0.0 and NaN payloads).
  bool bit_equal(const EmbeddingMatrix& other) const;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  MatrixRole role_ = MatrixRole::kInput;
  std::vector<float> data_;
};

// Input embeddings plus, for untied models, the output projection.
struct ModelEmbeddings {
  EmbeddingMatrix input;
  std::optional<EmbeddingMatrix> output;

  bool tied() const noexcept { return !output.has_value(); }

  // Throws InputError when the output matrix disagrees with the input.
  void validate() const;
};

}  // namespace tokengraft
