#include "termgnn/gnn/persist.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

namespace termgnn::gnn {

namespace {

constexpr char kMagic[8] = {'T', 'G', 'N', 'N', 'M', 'D', 'L', '\0'};

template <class T>
void put_le(std::string& out, T value) {
  auto bits = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.append(bits.data(), bits.size());
}

template <class T>
T get_le(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw ModelFormatError("model file is truncated");
  std::array<char, sizeof(T)> bits;
  std::memcpy(bits.data(), bytes.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  pos += sizeof(T);
  return std::bit_cast<T>(bits);
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << v;
  return s.str();
}

}  // namespace

std::string serialize(const Model& m) {
  nlohmann::ordered_json header;
  header["kind"] = to_string(m.kind);
  header["vocab_file"] = m.vocab_file;
  if (is_graph_model(m.kind)) {
    header["vocab_hash"] = hex(m.vocab.hash());
    header["vocab"] = nlohmann::ordered_json::parse(m.vocab.to_json());
  } else {
    header["line_vocab"] = m.line_vocab.lines();
  }
  header["hyperparameters"] = {{"hidden", m.hp.hidden},           {"graph_layers", m.hp.graph_layers},
                               {"dense_hidden", m.hp.dense_hidden}, {"leaky_slope", m.hp.leaky_slope},
                               {"focal_gamma", m.hp.focal_gamma},   {"focal_alpha", m.hp.focal_alpha}};
  auto tensors = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const Tensor& t = m.params.values()[i];
    tensors.push_back({{"name", m.params.names()[i]}, {"rows", t.rows()}, {"cols", t.cols()}});
  }
  header["tensors"] = tensors;
  std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kModelFormatVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  for (const Tensor& t : m.params.values()) {
    for (Eigen::Index i = 0; i < t.size(); ++i) put_le<double>(out, t.data()[i]);
  }
  return out;
}

Model deserialize(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ModelFormatError("not a model file (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kModelFormatVersion) throw ModelFormatError("unsupported model format version " + std::to_string(version));
  auto len = get_le<std::uint64_t>(bytes, pos);
  if (pos + len > bytes.size()) throw ModelFormatError("model header is truncated");

  Model m;
  try {
    auto header = nlohmann::json::parse(bytes.substr(pos, len));
    pos += len;
    m.kind = parse_model_kind(header.at("kind").get<std::string>());
    m.vocab_file = header.at("vocab_file").get<std::string>();
    if (is_graph_model(m.kind)) {
      m.vocab = graph::Vocabulary::from_json(header.at("vocab").dump());
      if (hex(m.vocab.hash()) != header.at("vocab_hash").get<std::string>()) {
        throw ModelFormatError("embedded vocabulary does not match its hash");
      }
    } else {
      m.line_vocab = LineVocabulary::from_lines(header.at("line_vocab").get<std::vector<std::string>>());
    }
    const auto& hp = header.at("hyperparameters");
    m.hp.hidden = hp.at("hidden").get<int>();
    m.hp.graph_layers = hp.at("graph_layers").get<int>();
    m.hp.dense_hidden = hp.at("dense_hidden").get<int>();
    m.hp.leaky_slope = hp.at("leaky_slope").get<double>();
    m.hp.focal_gamma = hp.at("focal_gamma").get<double>();
    m.hp.focal_alpha = hp.at("focal_alpha").get<double>();
    for (const auto& t : header.at("tensors")) {
      auto rows = t.at("rows").get<Eigen::Index>();
      auto cols = t.at("cols").get<Eigen::Index>();
      if (rows < 0 || cols < 0) throw ModelFormatError("negative tensor shape");
      Tensor value(rows, cols);
      for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = get_le<double>(bytes, pos);
      m.params.add(t.at("name").get<std::string>(), std::move(value));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed model header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(std::string("malformed model header: ") + e.what());
  }
  if (pos != bytes.size()) throw ModelFormatError("trailing bytes after model tensors");

  ParamSet expected = init_params(m.kind, m.hp, m.input_dim(), 0);
  if (expected.names() != m.params.names()) throw ModelFormatError("tensor table does not match the model kind");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected.values()[i].rows() != m.params.values()[i].rows() ||
        expected.values()[i].cols() != m.params.values()[i].cols()) {
      throw ModelFormatError("tensor " + expected.names()[i] + " has the wrong shape");
    }
  }
  return m;
}

void save_model(const Model& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::string bytes = serialize(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open model file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace termgnn::gnn
