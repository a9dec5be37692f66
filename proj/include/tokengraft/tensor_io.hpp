#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "tokengraft/embedding.hpp"
#include "tokengraft/error.hpp"

namespace tokengraft {

// Tensor container: u64 little-endian header length, a JSON header
// {"name": {"dtype":"F32","shape":[rows,cols],"data_offsets":[begin,end]}},
// then the raw little-endian payload. Same layout as safetensors.
using TensorMap = std::map<std::string, EmbeddingMatrix>;

inline constexpr std::string_view kInputTensorName = "embed.input";
inline constexpr std::string_view kOutputTensorName = "embed.output";

class TensorFormatError : public FormatError {
 public:
  enum class Kind { kHeader, kDtype, kShape, kTruncated, kOverlap, kGap };

  TensorFormatError(Kind kind, const std::string& message)
      : FormatError(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Canonical bytes: names sorted, payload in name order, header padded with
// spaces to a multiple of 8 bytes.
std::string serialize_tensors(const TensorMap& tensors);
TensorMap parse_tensors(std::string_view bytes);

void write_tensors(const TensorMap& tensors, const std::filesystem::path& path);
TensorMap read_tensors(const std::filesystem::path& path);

TensorMap tensors_from_model(const ModelEmbeddings& model);
// `embed.input` is required; `embed.output` marks the model as untied.
ModelEmbeddings model_from_tensors(TensorMap tensors);

}  // namespace tokengraft
