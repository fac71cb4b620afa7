#include "crackdet/artifact.hpp"

#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "crackdet/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace crackdet {

namespace {

constexpr char kMagic[4] = {'C', 'D', 'T', 'A'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

std::string now_iso8601() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void write_tensor_archive(const fs::path& path,
                          const std::map<std::string, Tensor>& tensors) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write tensor archive: " + path.string());
  f.write(kMagic, 4);
  put(f, kVersion);
  put(f, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put(f, static_cast<uint16_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(f, static_cast<uint8_t>(0));  // dtype: f32
    put(f, static_cast<uint8_t>(t.rank()));
    for (int d : t.shape()) put(f, static_cast<int32_t>(d));
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  if (!f) throw ConfigError("short write: " + path.string());
}

std::map<std::string, Tensor> read_tensor_archive(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ArtifactError("cannot open tensor archive: " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw ArtifactError("not a crackdet tensor archive: " + path.string());
  const auto version = get<uint32_t>(f);
  if (version != kVersion)
    throw ArtifactError("unsupported archive version " + std::to_string(version));
  const auto count = get<uint32_t>(f);
  std::map<std::string, Tensor> out;
  for (uint32_t i = 0; i < count; ++i) {
    const auto name_len = get<uint16_t>(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const auto dtype = get<uint8_t>(f);
    if (dtype != 0) throw ArtifactError("unsupported dtype in archive");
    const auto ndim = get<uint8_t>(f);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = get<int32_t>(f);
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!f) throw ArtifactError("truncated archive: " + path.string());
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

void save_artifact(const ClassifierModel& model, const fs::path& dir,
                   const std::string& training_config_digest) {
  fs::create_directories(dir);

  std::map<std::string, Tensor> tensors;
  for (const auto* p : model.network().parameters()) tensors.emplace(p->name, p->value);
  write_tensor_archive(dir / "weights.tensors", tensors);

  const auto& k = model.preprocess_constants();
  json meta;
  meta["format_version"] = 1;
  meta["backbone"] = model.spec().name;
  meta["regime"] = to_string(model.regime());
  meta["preprocess_mode"] = to_string(model.spec().preprocess);
  meta["preprocess_constants"] = {
      {"bgr_mean", k.bgr_mean}, {"rgb_mean", k.rgb_mean}, {"rgb_std", k.rgb_std}};
  meta["class_order"] = {to_string(model.class_order()[0]),
                         to_string(model.class_order()[1])};
  meta["seed"] = model.seed();
  meta["pretrained"] = model.pretrained();
  meta["feature_width"] = model.feature_width();
  meta["training_config_digest"] = training_config_digest;
  meta["created_at"] = now_iso8601();

  std::ofstream f(dir / "metadata.json");
  if (!f) throw ConfigError("cannot write metadata.json under " + dir.string());
  f << meta.dump(2) << '\n';
}

ClassifierModel load_artifact_model(const fs::path& dir) {
  const fs::path meta_path = dir / "metadata.json";
  if (!fs::exists(meta_path))
    throw ArtifactError("artifact is missing metadata.json: " + dir.string());
  std::ifstream f(meta_path);
  json meta;
  try {
    meta = json::parse(f);
  } catch (const json::exception& e) {
    throw ArtifactError("malformed metadata.json: " + std::string(e.what()));
  }

  const std::string backbone = meta.at("backbone").get<std::string>();
  const auto regime = parse_regime(meta.at("regime").get<std::string>());
  if (!regime) throw ArtifactError("metadata.json has unknown regime");
  const auto mode = parse_preprocess_mode(meta.at("preprocess_mode").get<std::string>());
  if (!mode) throw ArtifactError("metadata.json has unknown preprocess_mode");

  ClassifierModel::BuildOptions opts;
  opts.seed = meta.value("seed", 0ull);
  ClassifierModel model = ClassifierModel::build(find_backbone(backbone), *regime, opts);
  if (model.spec().preprocess != *mode)
    throw ArtifactError("metadata preprocess_mode disagrees with the registry for " +
                        backbone);

  auto order_json = meta.at("class_order");
  if (!order_json.is_array() || order_json.size() != 2)
    throw ArtifactError("metadata class_order must list two classes");
  const auto parse_cls = [](const std::string& s) {
    auto l = parse_label(s);
    if (!l) throw ArtifactError("metadata class_order has unknown label '" + s + "'");
    return *l;
  };
  model.set_class_order({parse_cls(order_json[0].get<std::string>()),
                         parse_cls(order_json[1].get<std::string>())});

  auto tensors = read_tensor_archive(dir / "weights.tensors");
  auto params = model.network().parameters();
  if (tensors.size() != params.size())
    throw ArtifactError("weights/metadata mismatch: archive has " +
                        std::to_string(tensors.size()) + " tensors, architecture " +
                        backbone + " expects " + std::to_string(params.size()));
  for (auto* p : params) {
    auto it = tensors.find(p->name);
    if (it == tensors.end())
      throw ArtifactError("weights archive misses tensor '" + p->name + "'");
    if (!it->second.same_shape(p->value))
      throw ArtifactError("tensor '" + p->name + "' has shape " +
                          it->second.shape_str() + ", architecture expects " +
                          p->value.shape_str());
    p->value = std::move(it->second);
  }
  return model;
}

}  // namespace crackdet
