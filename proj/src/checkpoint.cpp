#include "topicrnn/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <vector>

#include <json.hpp>

#include "topicrnn/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace topicrnn {
namespace checkpoint {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'T', 'R', 'N', 'N'};

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& in, const std::string& path) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw IoError("truncated checkpoint: " + path);
  return v;
}

json config_to_json(const TopicRnnModel& model) {
  const ModelConfig& config = model.config();
  const Vocabulary& vocab = model.vocab();
  json j;
  j["cell"] = to_string(config.cell);
  j["hidden"] = config.hidden;
  j["layers"] = config.layers;
  j["topics"] = config.topics;
  j["infer_hidden"] = config.infer_hidden;
  j["infer_layers"] = config.infer_layers;
  j["normalize_bow"] = config.normalize_bow;
  j["seed"] = config.seed;
  json v;
  v["tokens"] = vocab.tokens();
  std::vector<int> flags;
  flags.reserve(vocab.size());
  for (bool f : vocab.stop_flags()) flags.push_back(f ? 1 : 0);
  v["stop_flags"] = flags;
  v["unk_id"] = vocab.unk_id();
  v["eos_id"] = vocab.eos_id();
  j["vocab"] = v;
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(vocab.hash()));
  j["vocab_hash"] = hash;
  return j;
}

}  // namespace

void save(const TopicRnnModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);

  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);

  std::string config = config_to_json(model).dump();
  write_u32(out, static_cast<uint32_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));

  const ParamStore& store = model.params();
  auto names = store.names();
  write_u32(out, static_cast<uint32_t>(names.size()));
  std::vector<float> buffer;
  for (const auto& name : names) {
    const Tensor& p = store.param(name);
    if (!p.all_finite()) {
      throw NumericError("refusing to save non-finite parameter: " + name);
    }
    write_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<uint32_t>(p.rank()));
    for (size_t d : p.shape()) write_u32(out, static_cast<uint32_t>(d));
    buffer.resize(p.size());
    for (size_t i = 0; i < p.size(); ++i) {
      buffer[i] = static_cast<float>(p[i]);
    }
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size() * sizeof(float)));
  }
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

std::unique_ptr<TopicRnnModel> load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);

  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a TopicRNN checkpoint: " + path);
  }
  uint32_t version = read_u32(in, path);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) +
                  " in " + path);
  }

  uint32_t json_len = read_u32(in, path);
  std::string config_text(json_len, '\0');
  in.read(config_text.data(), json_len);
  if (!in) throw IoError("truncated checkpoint: " + path);

  json j;
  try {
    j = json::parse(config_text);
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint config in " + path + ": " + e.what());
  }

  ModelConfig config;
  Vocabulary vocab;
  try {
    config.cell = cell_kind_from_string(j.at("cell").get<std::string>());
    config.hidden = j.at("hidden").get<size_t>();
    config.layers = j.at("layers").get<size_t>();
    config.topics = j.at("topics").get<size_t>();
    config.infer_hidden = j.at("infer_hidden").get<size_t>();
    config.infer_layers = j.at("infer_layers").get<size_t>();
    config.normalize_bow = j.at("normalize_bow").get<bool>();
    config.seed = j.at("seed").get<uint64_t>();
    const json& v = j.at("vocab");
    auto tokens = v.at("tokens").get<std::vector<std::string>>();
    auto flag_ints = v.at("stop_flags").get<std::vector<int>>();
    std::vector<bool> flags(flag_ints.size());
    for (size_t i = 0; i < flags.size(); ++i) flags[i] = flag_ints[i] != 0;
    vocab = Vocabulary(std::move(tokens), std::move(flags),
                       v.at("unk_id").get<uint32_t>(),
                       v.at("eos_id").get<uint32_t>());
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint config in " + path + ": " + e.what());
  }

  uint32_t tensor_count = read_u32(in, path);
  std::map<std::string, Tensor> params;
  std::vector<float> buffer;
  for (uint32_t i = 0; i < tensor_count; ++i) {
    uint32_t name_len = read_u32(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    uint32_t rank = read_u32(in, path);
    std::vector<size_t> shape(rank);
    size_t total = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      shape[d] = read_u32(in, path);
      total *= shape[d];
    }
    buffer.resize(total);
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(total * sizeof(float)));
    if (!in) throw IoError("truncated checkpoint: " + path);
    Tensor t(shape);
    for (size_t e = 0; e < total; ++e) t[e] = static_cast<double>(buffer[e]);
    params.emplace(std::move(name), std::move(t));
  }

  return std::make_unique<TopicRnnModel>(config, std::move(vocab), params);
}

}  // namespace checkpoint
}  // namespace topicrnn
