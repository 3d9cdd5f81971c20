#include <fstream>

#include <nlohmann/json.hpp>

#include "uqbot/error.hpp"
#include "uqbot/model.hpp"

namespace uqbot {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "uqbot-checkpoint";
constexpr int kVersion = 1;

json arch_to_json(const ArchConfig& a) {
  return json{{"kind", arch_kind_name(a.kind)},
              {"n_features", a.n_features},
              {"hidden_size", a.hidden_size},
              {"embed_dim", a.embed_dim},
              {"dropout_rate", a.dropout_rate},
              {"conv_filters", a.conv_filters},
              {"conv_kernel", a.conv_kernel},
              {"pool_size", a.pool_size},
              {"n_classes", a.n_classes}};
}

ArchConfig arch_from_json(const json& j) {
  ArchConfig a;
  a.kind = parse_arch_kind(j.at("kind").get<std::string>());
  a.n_features = j.at("n_features").get<std::size_t>();
  a.hidden_size = j.at("hidden_size").get<std::size_t>();
  a.embed_dim = j.at("embed_dim").get<std::size_t>();
  a.dropout_rate = j.at("dropout_rate").get<double>();
  a.conv_filters = j.at("conv_filters").get<std::size_t>();
  a.conv_kernel = j.at("conv_kernel").get<std::size_t>();
  a.pool_size = j.at("pool_size").get<std::size_t>();
  a.n_classes = j.at("n_classes").get<std::size_t>();
  a.validate();
  return a;
}

}  // namespace

void save_checkpoint(const ModelParams& p, const std::filesystem::path& path) {
  json tensors = json::array();
  for (const auto& t : p.layout().tensors()) {
    auto v = p.tensor(t.name);
    tensors.push_back(json{{"name", t.name},
                           {"shape", t.shape},
                           {"values", std::vector<double>(v.begin(), v.end())}});
  }
  const json doc{{"format", kFormat},
                 {"version", kVersion},
                 {"arch", arch_to_json(p.arch())},
                 {"seed", p.seed},
                 {"tensors", std::move(tensors)}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    const json doc = json::parse(in);
    if (doc.at("format") != kFormat || doc.at("version") != kVersion) {
      throw Error(ErrorCode::CheckpointError, "unsupported checkpoint format");
    }
    ModelParams p(arch_from_json(doc.at("arch")), doc.at("seed").get<std::uint64_t>());
    const auto& tensors = doc.at("tensors");
    if (tensors.size() != p.layout().tensors().size()) {
      throw Error(ErrorCode::CheckpointError, "tensor count does not match architecture");
    }
    for (const auto& t : tensors) {
      const auto name = t.at("name").get<std::string>();
      const auto& info = p.layout().find(name);
      if (t.at("shape").get<std::vector<std::size_t>>() != info.shape) {
        throw Error(ErrorCode::CheckpointError, "shape mismatch for " + name);
      }
      const auto values = t.at("values").get<std::vector<double>>();
      if (values.size() != info.size) {
        throw Error(ErrorCode::CheckpointError, "value count mismatch for " + name);
      }
      std::copy(values.begin(), values.end(), p.tensor(name).begin());
    }
    if (!p.all_finite()) throw Error(ErrorCode::CheckpointError, "non-finite weight");
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CheckpointError, e.what());
  }
}

}  // namespace uqbot
