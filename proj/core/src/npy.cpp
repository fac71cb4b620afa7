#include "crackdet/npy.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "crackdet/errors.hpp"

namespace crackdet {

void write_npy(const std::filesystem::path& path, const Tensor& t) {
  std::ostringstream dict;
  dict << "{'descr': '<f4', 'fortran_order': False, 'shape': (";
  for (size_t i = 0; i < t.shape().size(); ++i) {
    dict << t.shape()[i];
    if (t.shape().size() == 1 || i + 1 < t.shape().size()) dict << ",";
    if (i + 1 < t.shape().size()) dict << ' ';
  }
  dict << "), }";
  std::string header = dict.str();
  // Pad so that magic(6)+version(2)+len(2)+header is 64-byte aligned.
  size_t unpadded = 10 + header.size() + 1;
  size_t pad = (64 - unpadded % 64) % 64;
  header.append(pad, ' ');
  header.push_back('\n');

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open for writing: " + path.string());
  const char magic[] = "\x93NUMPY";
  f.write(magic, 6);
  f.put(1).put(0);
  uint16_t hlen = static_cast<uint16_t>(header.size());
  f.write(reinterpret_cast<const char*>(&hlen), 2);
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  f.write(reinterpret_cast<const char*>(t.data()),
          static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!f) throw ConfigError("short write: " + path.string());
}

Tensor read_npy(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open: " + path.string());
  char magic[6];
  f.read(magic, 6);
  if (!f || std::memcmp(magic, "\x93NUMPY", 6) != 0)
    throw ArtifactError("not a .npy file: " + path.string());
  char ver[2];
  f.read(ver, 2);
  uint16_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 2);
  std::string header(hlen, '\0');
  f.read(header.data(), hlen);
  if (header.find("'<f4'") == std::string::npos)
    throw ArtifactError("unsupported npy dtype in " + path.string());
  if (header.find("'fortran_order': False") == std::string::npos)
    throw ArtifactError("fortran-order npy unsupported: " + path.string());
  auto lp = header.find('(');
  auto rp = header.find(')', lp);
  if (lp == std::string::npos || rp == std::string::npos)
    throw ArtifactError("malformed npy header: " + path.string());
  std::vector<int> shape;
  std::string dims = header.substr(lp + 1, rp - lp - 1);
  std::istringstream ds(dims);
  std::string tok;
  while (std::getline(ds, tok, ',')) {
    std::string trimmed;
    for (char c : tok)
      if (!isspace(static_cast<unsigned char>(c))) trimmed += c;
    if (!trimmed.empty()) shape.push_back(std::stoi(trimmed));
  }
  Tensor t(shape);
  f.read(reinterpret_cast<char*>(t.data()),
         static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!f) throw ArtifactError("truncated npy data: " + path.string());
  return t;
}

}  // namespace crackdet
