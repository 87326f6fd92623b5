#include "grlforge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "grlforge/errors.hpp"

namespace grlforge::io {

using nlohmann::ordered_json;

namespace {

constexpr char kMagic[5] = {'G', 'R', 'L', 'F', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in, const std::string& path, const char* what) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (in.gcount() != 8)
    throw ParseError(path + ": truncated checkpoint while reading " + what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_tensor(std::ostream& out, const Tensor& t) {
  put_u64(out, t.shape().size());
  for (std::size_t d : t.shape()) put_u64(out, d);
  for (std::size_t i = 0; i < t.size(); ++i)
    put_u64(out, std::bit_cast<std::uint64_t>(t.data()[i]));
}

void get_tensor_into(std::istream& in, const std::string& path, const std::string& name,
                     Tensor& t) {
  const std::uint64_t rank = get_u64(in, path, "tensor rank");
  if (rank != t.shape().size())
    throw ParseError(path + ": tensor '" + name + "' rank " + std::to_string(rank) +
                     " does not match the layer specs");
  for (std::size_t d = 0; d < rank; ++d) {
    const std::uint64_t dim = get_u64(in, path, "tensor dims");
    if (dim != t.shape()[d])
      throw ParseError(path + ": tensor '" + name + "' dimension mismatch");
  }
  for (std::size_t i = 0; i < t.size(); ++i)
    t.data()[i] = std::bit_cast<double>(get_u64(in, path, "tensor data"));
}

ordered_json spec_to_json(const nn::LayerSpec& spec) {
  ordered_json j;
  j["kind"] = nn::layer_kind_name(spec);
  if (const auto* l = std::get_if<nn::LinearSpec>(&spec)) {
    j["in"] = l->in;
    j["out"] = l->out;
  } else if (const auto* c = std::get_if<nn::Conv2dSpec>(&spec)) {
    j["in_channels"] = c->in_channels;
    j["out_channels"] = c->out_channels;
    j["kernel"] = c->kernel;
    j["stride"] = c->stride;
    j["padding"] = c->padding;
  } else if (const auto* m = std::get_if<nn::MaxPoolSpec>(&spec)) {
    j["window"] = m->window;
    j["stride"] = m->stride;
  }
  return j;
}

nn::LayerSpec spec_from_json(const ordered_json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear")
    return nn::LinearSpec{j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>()};
  if (kind == "conv2d")
    return nn::Conv2dSpec{j.at("in_channels").get<std::size_t>(),
                          j.at("out_channels").get<std::size_t>(),
                          j.at("kernel").get<std::size_t>(), j.at("stride").get<std::size_t>(),
                          j.at("padding").get<std::size_t>()};
  if (kind == "relu") return nn::ReluSpec{};
  if (kind == "maxpool")
    return nn::MaxPoolSpec{j.at("window").get<std::size_t>(), j.at("stride").get<std::size_t>()};
  if (kind == "flatten") return nn::FlattenSpec{};
  throw ParseError("unknown layer kind '" + kind + "' in checkpoint header");
}

ordered_json network_to_json(const nn::Network& net) {
  ordered_json j;
  j["input_dims"] = net.input_dims();
  j["layers"] = ordered_json::array();
  for (const nn::LayerSpec& s : net.specs()) j["layers"].push_back(spec_to_json(s));
  return j;
}

nn::Network network_from_json(const ordered_json& j) {
  std::vector<nn::LayerSpec> specs;
  for (const ordered_json& s : j.at("layers")) specs.push_back(spec_from_json(s));
  return nn::Network(std::move(specs), j.at("input_dims").get<std::vector<std::size_t>>());
}

}  // namespace

void save_checkpoint(const std::string& path, const dann::DannModel& model,
                     const std::string& backbone,
                     const std::optional<Normalization>& normalization) {
  model.validate();
  ordered_json header;
  header["schema"] = 1;
  header["backbone"] = backbone;
  header["grl"] = {
      {"mode", model.grl.mode == dann::GrlConfig::Mode::annealed ? "annealed" : "constant"},
      {"lambda0", model.grl.lambda0},
      {"gamma", model.grl.gamma}};
  header["feature"] = network_to_json(model.feature);
  header["source_head"] = network_to_json(model.source_head);
  header["domain_head"] = network_to_json(model.domain_head);
  if (normalization) {
    header["normalization"] = {{"mean", normalization->mean},
                               {"stddev", normalization->stddev}};
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_checkpoint: cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  const std::string head = header.dump();
  put_u64(out, head.size());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const nn::Network* net : {&model.feature, &model.source_head, &model.domain_head})
    for (const nn::ParamTensor& p : net->params()) put_tensor(out, p.value);
  if (!out) throw IoError("save_checkpoint: short write to '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open '" + path + "'");

  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError(path + ": bad magic, expected \"GRLF1\" (not a checkpoint file?)");

  const std::uint64_t head_len = get_u64(in, path, "header length");
  if (head_len > (1ull << 24))
    throw ParseError(path + ": implausible header length " + std::to_string(head_len));
  std::string head(head_len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head_len));
  if (static_cast<std::uint64_t>(in.gcount()) != head_len)
    throw ParseError(path + ": truncated checkpoint header");

  ordered_json header;
  try {
    header = ordered_json::parse(head);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": checkpoint header is not valid JSON: " + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.backbone = header.at("backbone").get<std::string>();
    const std::string mode = header.at("grl").at("mode").get<std::string>();
    ckpt.model.grl.mode = mode == "annealed" ? dann::GrlConfig::Mode::annealed
                                             : dann::GrlConfig::Mode::constant;
    ckpt.model.grl.lambda0 = header.at("grl").at("lambda0").get<double>();
    ckpt.model.grl.gamma = header.at("grl").at("gamma").get<double>();
    ckpt.model.feature = network_from_json(header.at("feature"));
    ckpt.model.source_head = network_from_json(header.at("source_head"));
    ckpt.model.domain_head = network_from_json(header.at("domain_head"));
    if (header.contains("normalization")) {
      Normalization norm;
      norm.mean = header["normalization"].at("mean").get<std::vector<double>>();
      norm.stddev = header["normalization"].at("stddev").get<std::vector<double>>();
      ckpt.normalization = std::move(norm);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": malformed checkpoint header: " + e.what());
  }

  for (nn::Network* net : {&ckpt.model.feature, &ckpt.model.source_head, &ckpt.model.domain_head})
    for (nn::ParamTensor& p : net->params()) get_tensor_into(in, path, p.name, p.value);

  // trailing bytes mean the file does not match its own header
  char extra;
  in.read(&extra, 1);
  if (in.gcount() != 0) throw ParseError(path + ": trailing bytes after tensor data");

  ckpt.model.validate();
  return ckpt;
}

}  // namespace grlforge::io
