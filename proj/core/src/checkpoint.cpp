#include "hqml/checkpoint.hpp"

#include <fstream>

#include "hqml/error.hpp"

namespace hqml {

nlohmann::json checkpoint_json(const Model& model, const nlohmann::json& config) {
  nlohmann::json params = nlohmann::json::object();
  const auto& ps = model.params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& t = ps.at(i);
    params[ps.name(i)] = {{"shape", t.shape()}, {"data", t.values()}};
  }
  return {{"schema_version", kCheckpointSchemaVersion},
          {"model", model.kind()},
          {"topology", model.topology()},
          {"config", config},
          {"parameters", std::move(params)}};
}

void save_checkpoint(const std::string& path, const Model& model, const nlohmann::json& config) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write checkpoint '" + path + "'");
  out << checkpoint_json(model, config).dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "write to '" + path + "' failed");
}

void load_checkpoint(const nlohmann::json& ckpt, Model& model) {
  try {
    if (ckpt.at("schema_version").get<int>() != kCheckpointSchemaVersion) {
      fail(ErrorKind::Config, "unsupported checkpoint schema version");
    }
    if (ckpt.at("model").get<std::string>() != model.kind()) {
      fail(ErrorKind::Config, "checkpoint holds a '" + ckpt.at("model").get<std::string>() +
                                  "' model, not '" + model.kind() + "'");
    }
    auto& ps = model.params();
    const auto& stored = ckpt.at("parameters");
    if (stored.size() != ps.size()) fail(ErrorKind::Config, "checkpoint parameter count differs");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const auto it = stored.find(ps.name(i));
      if (it == stored.end()) fail(ErrorKind::Config, "checkpoint lacks parameter '" + ps.name(i) + "'");
      auto shape = it->at("shape").get<std::vector<std::size_t>>();
      auto data = it->at("data").get<std::vector<double>>();
      if (shape != ps.at(i).shape() || data.size() != ps.at(i).size()) {
        fail(ErrorKind::Config, "shape mismatch for parameter '" + ps.name(i) + "'");
      }
      ps.at(i) = diff::Tensor(std::move(shape), std::move(data));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed checkpoint: ") + e.what());
  }
}

void load_checkpoint(const std::string& path, Model& model) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, "checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  load_checkpoint(j, model);
}

}  // namespace hqml
