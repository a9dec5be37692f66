#include "tokengraft/tensor_io.hpp"

#include <algorithm>
#include <vector>

#include "byte_io.hpp"
#include "json_util.hpp"

namespace tokengraft {

namespace {

using Kind = TensorFormatError::Kind;

[[noreturn]] void fail(Kind kind, const std::string& msg) {
  throw TensorFormatError(kind, "tensor file: " + msg);
}

}  // namespace

std::string serialize_tensors(const TensorMap& tensors) {
  nlohmann::json header = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : tensors) {
    const std::uint64_t bytes = m.data().size() * sizeof(float);
    header[name] = {{"dtype", "F32"},
                    {"shape", {m.rows(), m.dim()}},
                    {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string head = header.dump();
  head.append((8 - head.size() % 8) % 8, ' ');

  std::string out;
  out.reserve(8 + head.size() + offset);
  detail::put_le<std::uint64_t>(out, head.size());
  out += head;
  for (const auto& [name, m] : tensors) {
    for (float v : m.data()) detail::put_le<float>(out, v);
  }
  return out;
}

TensorMap parse_tensors(std::string_view bytes) {
  if (bytes.size() < 8) fail(Kind::kTruncated, "shorter than the 8-byte header length");
  detail::ByteReader in(bytes, "tensor file");
  const auto header_len = in.get<std::uint64_t>();
  if (header_len > in.remaining()) {
    fail(Kind::kTruncated, "header length " + std::to_string(header_len) +
                               " exceeds file size " + std::to_string(bytes.size()));
  }
  const auto header_text = in.bytes(header_len);
  const std::string_view payload = bytes.substr(8 + header_len);

  nlohmann::json header;
  try {
    header = detail::parse_json(header_text, "tensor header");
  } catch (const FormatError& e) {
    fail(Kind::kHeader, e.what());
  }
  if (!header.is_object()) fail(Kind::kHeader, "header is not a JSON object");

  struct Entry {
    std::string name;
    std::uint64_t rows, cols, begin, end;
  };
  std::vector<Entry> entries;
  for (const auto& [name, spec] : header.items()) {
    if (name == "__metadata__") continue;
    try {
      const auto dtype = spec.at("dtype").get<std::string>();
      if (dtype != "F32") fail(Kind::kDtype, "tensor '" + name + "' has dtype " + dtype + ", only F32 is supported");
      const auto& shape = spec.at("shape");
      if (!shape.is_array() || shape.size() != 2) {
        fail(Kind::kShape, "tensor '" + name + "' must be 2-dimensional, shape " + shape.dump());
      }
      const auto& offs = spec.at("data_offsets");
      if (!offs.is_array() || offs.size() != 2) {
        fail(Kind::kHeader, "tensor '" + name + "' data_offsets must have two entries");
      }
      Entry e{name, shape[0].get<std::uint64_t>(), shape[1].get<std::uint64_t>(),
              offs[0].get<std::uint64_t>(), offs[1].get<std::uint64_t>()};
      if (e.end < e.begin) fail(Kind::kHeader, "tensor '" + name + "' has end < begin");
      if (e.end - e.begin != e.rows * e.cols * sizeof(float)) {
        fail(Kind::kShape, "tensor '" + name + "' byte range does not match its shape");
      }
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      fail(Kind::kHeader, "tensor '" + name + "': " + ex.what());
    }
  }

  for (const auto& e : entries) {
    if (e.end > payload.size()) {
      fail(Kind::kTruncated, "tensor '" + e.name + "' ends at payload byte " +
                                 std::to_string(e.end) + " but the payload has " +
                                 std::to_string(payload.size()) + " bytes");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
  });
  std::uint64_t cursor = 0;
  for (const auto& e : entries) {
    if (e.begin < cursor) fail(Kind::kOverlap, "tensor '" + e.name + "' overlaps the previous tensor");
    if (e.begin > cursor) fail(Kind::kGap, "gap before tensor '" + e.name + "'");
    cursor = e.end;
  }
  if (cursor != payload.size()) {
    fail(Kind::kGap, std::to_string(payload.size() - cursor) + " unreferenced payload bytes");
  }

  TensorMap out;
  for (const auto& e : entries) {
    detail::ByteReader r(payload.substr(e.begin, e.end - e.begin), e.name);
    std::vector<float> data(e.rows * e.cols);
    for (auto& v : data) v = r.get<float>();
    out.emplace(e.name, EmbeddingMatrix(e.rows, e.cols, std::move(data)));
  }
  return out;
}

void write_tensors(const TensorMap& tensors, const std::filesystem::path& path) {
  detail::write_file(path, serialize_tensors(tensors));
}

TensorMap read_tensors(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return parse_tensors(bytes);
  } catch (const TensorFormatError& e) {
    throw TensorFormatError(e.kind(), path.string() + ": " + e.what());
  }
}

TensorMap tensors_from_model(const ModelEmbeddings& model) {
  TensorMap out;
  out.emplace(std::string(kInputTensorName), model.input);
  if (model.output) out.emplace(std::string(kOutputTensorName), *model.output);
  return out;
}

ModelEmbeddings model_from_tensors(TensorMap tensors) {
  auto in = tensors.find(std::string(kInputTensorName));
  if (in == tensors.end()) {
    throw FormatError("tensor file has no '" + std::string(kInputTensorName) + "' tensor");
  }
  ModelEmbeddings model{std::move(in->second), std::nullopt};
  model.input.set_role(MatrixRole::kInput);
  if (auto out = tensors.find(std::string(kOutputTensorName)); out != tensors.end()) {
    model.output = std::move(out->second);
    model.output->set_role(MatrixRole::kOutput);
  }
  model.validate();
  return model;
}

}  // namespace tokengraft
