#include "escl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "escl/errors.hpp"

namespace escl {

namespace {

constexpr char kMagic[8] = {'E', 'S', 'C', 'L', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& offset, const std::filesystem::path& path) {
  if (offset + sizeof(T) > in.size()) {
    throw DataError("checkpoint " + path.string() + " is truncated");
  }
  T value;
  std::memcpy(&value, in.data() + offset, sizeof(T));
  offset += sizeof(T);
  return value;
}

void put_doubles(std::string& out, std::span<const double> values) {
  out.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
}

std::vector<double> take_doubles(const std::string& in, std::size_t& offset, std::size_t count,
                                 const std::filesystem::path& path) {
  if (offset + count * sizeof(double) > in.size()) {
    throw DataError("checkpoint " + path.string() + " is truncated");
  }
  std::vector<double> values(count);
  std::memcpy(values.data(), in.data() + offset, count * sizeof(double));
  offset += count * sizeof(double);
  return values;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  checkpoint.params.validate();
  const auto& cfg = checkpoint.params.config;
  if (checkpoint.vocab.size() != cfg.vocab_size) {
    throw DimensionError("save_checkpoint: vocabulary has " +
                         std::to_string(checkpoint.vocab.size()) + " ids but encoder expects " +
                         std::to_string(cfg.vocab_size));
  }

  nlohmann::json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["vocab_size"] = cfg.vocab_size;
  header["embed_dim"] = cfg.embed_dim;
  header["output_dim"] = cfg.output_dim;
  header["vocab"] = checkpoint.vocab.words();
  header["step"] = checkpoint.step;
  nlohmann::json tensors = nlohmann::json::array();
  const auto describe = [&](const char* name, const Tensor& t) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}});
  };
  describe("token_embeddings", checkpoint.params.token_embeddings);
  describe("projection_weight", checkpoint.params.projection_weight);
  describe("projection_bias", checkpoint.params.projection_bias);
  if (checkpoint.optimizer) {
    header["optimizer"] = {{"t", checkpoint.optimizer->t},
                           {"moments", checkpoint.optimizer->m.size()}};
  }
  header["tensors"] = tensors;

  const std::string header_text = header.dump();
  std::string blob(kMagic, sizeof(kMagic));
  put<std::uint32_t>(blob, kCheckpointFormatVersion);
  put<std::uint64_t>(blob, header_text.size());
  blob += header_text;
  put_doubles(blob, checkpoint.params.token_embeddings.data());
  put_doubles(blob, checkpoint.params.projection_weight.data());
  put_doubles(blob, checkpoint.params.projection_bias.data());
  if (checkpoint.optimizer) {
    put_doubles(blob, checkpoint.optimizer->m);
    put_doubles(blob, checkpoint.optimizer->v);
  }
  write_file_atomic(path, blob);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string blob = buffer.str();

  if (blob.size() < sizeof(kMagic) || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path.string() + " is not a checkpoint file");
  }
  std::size_t offset = sizeof(kMagic);
  const auto version = take<std::uint32_t>(blob, offset, path);
  if (version != kCheckpointFormatVersion) {
    throw DataError("checkpoint " + path.string() + " has unsupported format version " +
                    std::to_string(version));
  }
  const auto header_len = take<std::uint64_t>(blob, offset, path);
  if (offset + header_len > blob.size()) throw DataError("checkpoint " + path.string() + " is truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.substr(offset, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path.string() + " has a malformed header: " + e.what());
  }
  offset += header_len;

  Checkpoint ck;
  try {
    if (header.at("format_version").get<std::uint32_t>() != version) {
      throw DataError("checkpoint " + path.string() + ": header and preamble versions differ");
    }
    ck.params.config = {header.at("vocab_size").get<std::size_t>(),
                        header.at("embed_dim").get<std::size_t>(),
                        header.at("output_dim").get<std::size_t>()};
    ck.vocab = Vocabulary::from_words(header.at("vocab").get<std::vector<std::string>>());
    ck.step = header.at("step").get<std::uint64_t>();

    const auto read_tensor = [&](std::size_t index, const char* name) {
      const auto& entry = header.at("tensors").at(index);
      if (entry.at("name").get<std::string>() != name) {
        throw DataError("checkpoint " + path.string() + ": expected tensor " + name);
      }
      auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      std::size_t count = 1;
      for (auto s : shape) count *= s;
      return Tensor(std::move(shape), take_doubles(blob, offset, count, path));
    };
    ck.params.token_embeddings = read_tensor(0, "token_embeddings");
    ck.params.projection_weight = read_tensor(1, "projection_weight");
    ck.params.projection_bias = read_tensor(2, "projection_bias");
    if (header.contains("optimizer")) {
      OptimizerState state;
      state.t = header["optimizer"].at("t").get<std::uint64_t>();
      const auto moments = header["optimizer"].at("moments").get<std::size_t>();
      state.m = take_doubles(blob, offset, moments, path);
      state.v = take_doubles(blob, offset, moments, path);
      ck.optimizer = std::move(state);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path.string() + " has a malformed header: " + e.what());
  }
  if (offset != blob.size()) {
    throw DataError("checkpoint " + path.string() + " has trailing bytes");
  }

  ck.params.validate();
  if (ck.vocab.size() != ck.params.config.vocab_size) {
    throw DimensionError("checkpoint " + path.string() + ": vocabulary has " +
                         std::to_string(ck.vocab.size()) + " ids but the embedding table has " +
                         std::to_string(ck.params.config.vocab_size) + " rows");
  }
  if (ck.optimizer && !ck.optimizer->m.empty() &&
      ck.optimizer->m.size() != ck.params.parameter_count()) {
    throw DimensionError("checkpoint " + path.string() +
                         ": optimizer moments do not match the parameter count");
  }
  return ck;
}

}  // namespace escl
