#include "ironbench/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ironbench/error.hpp"

namespace ironbench {

using json = nlohmann::json;

namespace {

constexpr char kMagic[8] = {'I', 'B', 'C', 'K', 'P', 'T', '0', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  std::memcpy(&v, in.data() + pos, 8);
  return v;
}

}  // namespace

std::string serialize_checkpoint(const Model& model) {
  json header;
  const auto& c = model.config;
  header["config"] = {{"vocab_size", c.vocab_size}, {"d_model", c.d_model},         {"n_layers", c.n_layers},
                      {"n_heads", c.n_heads},       {"d_ff", c.d_ff},               {"max_seq_len", c.max_seq_len},
                      {"dropout_rate", c.dropout_rate}, {"n_segments", c.n_segments}};
  header["head"] = std::string(to_string(model.head));
  header["step"] = model.step;
  json tensors = json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const auto& t = model.params.tensor(i);
    tensors.push_back({{"name", model.params.name(i)}, {"shape", t.shape}, {"offset", offset}});
    offset += t.size();
  }
  header["tensors"] = tensors;
  const std::string header_text = header.dump();

  std::string out(kMagic, 8);
  put_u64(out, header_text.size());
  out += header_text;
  out.reserve(out.size() + offset * sizeof(double));
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const auto& t = model.params.tensor(i);
    out.append(reinterpret_cast<const char*>(t.data.data()), t.size() * sizeof(double));
  }
  return out;
}

Model deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    fail(Errc::parse, "not a checkpoint (bad magic)");
  const std::uint64_t header_len = get_u64(bytes, 8);
  if (header_len > bytes.size() - 16) fail(Errc::parse, "truncated checkpoint header");
  json header;
  try {
    header = json::parse(bytes.substr(16, header_len));
  } catch (const json::exception& e) {
    fail(Errc::parse, std::string("checkpoint header: ") + e.what());
  }
  Model model;
  try {
    const auto& c = header.at("config");
    model.config.vocab_size = c.at("vocab_size").get<std::size_t>();
    model.config.d_model = c.at("d_model").get<std::size_t>();
    model.config.n_layers = c.at("n_layers").get<std::size_t>();
    model.config.n_heads = c.at("n_heads").get<std::size_t>();
    model.config.d_ff = c.at("d_ff").get<std::size_t>();
    model.config.max_seq_len = c.at("max_seq_len").get<std::size_t>();
    model.config.dropout_rate = c.at("dropout_rate").get<double>();
    model.config.n_segments = c.at("n_segments").get<std::size_t>();
    model.head = parse_head_kind(header.at("head").get<std::string>());
    model.step = header.at("step").get<std::uint64_t>();
    const std::size_t data_start = 16 + header_len;
    const std::size_t available = (bytes.size() - data_start) / sizeof(double);
    for (const auto& t : header.at("tensors")) {
      auto& tensor = model.params.add(t.at("name").get<std::string>(), t.at("shape").get<std::vector<std::size_t>>());
      const auto offset = t.at("offset").get<std::size_t>();
      if (offset + tensor.size() > available) fail(Errc::parse, "checkpoint data is truncated");
      std::memcpy(tensor.data.data(), bytes.data() + data_start + offset * sizeof(double),
                  tensor.size() * sizeof(double));
    }
  } catch (const json::exception& e) {
    fail(Errc::parse, std::string("checkpoint header: ") + e.what());
  }
  model.config.validate();
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  const std::string bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io, "short write to " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::missing_artifact, "cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_checkpoint(buffer.str());
}

}  // namespace ironbench
