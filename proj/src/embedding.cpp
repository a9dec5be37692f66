#include "tokengraft/embedding.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "tokengraft/error.hpp"

namespace tokengraft {

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, MatrixRole role)
    : rows_(rows), dim_(dim), role_(role), data_(rows * dim, 0.0f) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                                 MatrixRole role)
    : rows_(rows), dim_(dim), role_(role), data_(std::move(data)) {
  if (data_.size() != rows_ * dim_) {
    throw InputError("embedding matrix " + std::to_string(rows_) + "x" +
                     std::to_string(dim_) + " given " + std::to_string(data_.size()) +
                     " values");
  }
}

bool EmbeddingMatrix::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool EmbeddingMatrix::bit_equal(const EmbeddingMatrix& other) const {
  return rows_ == other.rows_ && dim_ == other.dim_ &&
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0;
}

void ModelEmbeddings::validate() const {
  if (!output) return;
  if (output->rows() != input.rows() || output->dim() != input.dim()) {
    throw InputError("output embedding matrix is " + std::to_string(output->rows()) + "x" +
                     std::to_string(output->dim()) + " but input is " +
                     std::to_string(input.rows()) + "x" + std::to_string(input.dim()));
  }
}

}  // namespace tokengraft
