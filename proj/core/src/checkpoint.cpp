// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include "colora/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "colora/error.hpp"

namespace colora {

namespace {

constexpr char kMagic[4] = {'C', 'L', 'R', '1'};
constexpr uint8_t kDtypeF32 = 0;
constexpr uint8_t kDtypeU8 = 1;
constexpr uint8_t kDtypeI64 = 2;

// ---- encoding helpers -------------------------------------------------------

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, sizeof(bits));
  put_u32(out, bits);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw IoError("checkpoint truncated");
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(buf[pos++]);
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint8_t>(buf[pos]) | (static_cast<uint16_t>(static_cast<uint8_t>(buf[pos + 1])) << 8);
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

struct Entry {
  uint8_t dtype = 0;
  std::vector<int> dims;
  std::string payload;
};

size_t dtype_size(uint8_t dtype) {
  switch (dtype) {
    case kDtypeF32:
      return 4;
    case kDtypeU8:
      return 1;
    case kDtypeI64:
      return 8;
    default:
      throw IoError("checkpoint: unknown dtype code " + std::to_string(dtype));
  }
}

void append_entry(std::string& out, const std::string& name, uint8_t dtype,
                  const std::vector<int>& dims, const std::string& payload) {
  if (name.size() > 0xffff) throw IoError("checkpoint: name too long");
  put_u16(out, static_cast<uint16_t>(name.size()));
  out += name;
  out.push_back(static_cast<char>(dtype));
  out.push_back(static_cast<char>(dims.size()));
  for (int d : dims) put_u32(out, static_cast<uint32_t>(d));
  out += payload;
}

std::string f32_payload(const Tensor& t) {
  std::string p;
  p.reserve(t.size() * 4);
  for (size_t i = 0; i < t.size(); ++i) put_f32(p, t[i]);
  return p;
}

// ---- architecture text -------------------------------------------------------

std::string pad_str(Padding p) { return p == Padding::kSame ? "same" : "valid"; }

Padding parse_pad(const std::string& s) {
  if (s == "same") return Padding::kSame;
  if (s == "valid") return Padding::kValid;
  throw IoError("checkpoint: bad padding token " + s);
}

std::string arch_text(const ModelGraph& g) {
  std::ostringstream os;
  os << "colora-arch v1\n";
  os << "input";
  for (int d : g.input_shape()) os << ' ' << d;
  os << '\n';
  for (const Layer& layer : g.layers()) {
    if (layer.name.find_first_of(" \t\n=") != std::string::npos) {
      throw IoError("checkpoint: layer name contains reserved characters: " + layer.name);
    }
    os << "layer ";
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, ConvLayer>) {
            os << "conv name=" << layer.name << " head=" << layer.is_head << " h=" << l.kernel.kh()
               << " w=" << l.kernel.kw() << " c=" << l.kernel.in_channels()
               << " t=" << l.kernel.out_channels() << " pad=" << pad_str(l.padding)
               << " stride=" << l.stride << " bias=" << l.kernel.bias.has_value();
          } else if constexpr (std::is_same_v<T, CoLoRALayer>) {
            os << "colora name=" << layer.name << " head=" << layer.is_head << " h=" << l.base.kh()
               << " w=" << l.base.kw() << " c=" << l.base.in_channels()
               << " t=" << l.base.out_channels() << " pad=" << pad_str(l.padding)
               << " stride=" << l.stride << " bias=" << l.base.bias.has_value()
               << " db=" << l.db.has_value();
          } else if constexpr (std::is_same_v<T, CnnAdapterLayer>) {
            os << "cnn_adapter name=" << layer.name << " head=" << layer.is_head
               << " h=" << l.base.kh() << " w=" << l.base.kw() << " c=" << l.base.in_channels()
               << " t=" << l.base.out_channels() << " pad=" << pad_str(l.padding)
               << " stride=" << l.stride << " bias=" << l.base.bias.has_value()
               << " aout=" << l.a.out_channels();
          } else if constexpr (std::is_same_v<T, ReluLayer>) {
            os << "relu name=" << layer.name << " head=" << layer.is_head;
          } else if constexpr (std::is_same_v<T, MaxPoolLayer>) {
            os << "maxpool name=" << layer.name << " head=" << layer.is_head;
          } else if constexpr (std::is_same_v<T, GlobalAvgPoolLayer>) {
            os << "gap name=" << layer.name << " head=" << layer.is_head;
          } else if constexpr (std::is_same_v<T, FlattenLayer>) {
            os << "flatten name=" << layer.name << " head=" << layer.is_head;
          } else if constexpr (std::is_same_v<T, DenseLayer>) {
            os << "dense name=" << layer.name << " head=" << layer.is_head << " in=" << l.w.dim(1)
               << " out=" << l.w.dim(0);
          } else if constexpr (std::is_same_v<T, DenseLoraLayer>) {
            os << "dense_lora name=" << layer.name << " head=" << layer.is_head
               << " k=" << l.w0.dim(0) << " d=" << l.w0.dim(1) << " rank=" << l.rank;
          }
        },
        layer.impl);
    os << '\n';
  }
  return os.str();
}

struct ArchLayer {
  std::string kind;
  std::map<std::string, std::string> kv;

  const std::string& get(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw IoError("checkpoint arch: missing key " + key);
    return it->second;
  }
  int geti(const std::string& key) const { return std::stoi(get(key)); }
};

struct Arch {
  std::vector<int> input;
  std::vector<ArchLayer> layers;
};

Arch parse_arch(const std::string& text) {
  Arch arch;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "colora-arch v1") {
    throw IoError("checkpoint: unrecognized arch header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "input") {
      int d;
      while (ls >> d) arch.input.push_back(d);
    } else if (tok == "layer") {
      ArchLayer al;
      ls >> al.kind;
      while (ls >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw IoError("checkpoint arch: bad token " + tok);
        al.kv[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
      arch.layers.push_back(std::move(al));
    } else {
      throw IoError("checkpoint arch: unknown line " + line);
    }
  }
  return arch;
}

ModelGraph graph_from_arch(const Arch& arch, const std::map<std::string, uint8_t>& flags) {
  ModelGraph g(arch.input);
  for (const ArchLayer& al : arch.layers) {
    Layer layer;
    layer.name = al.get("name");
    layer.is_head = al.geti("head") != 0;
    if (al.kind == "conv") {
      ConvKernel k(Tensor::zeros({al.geti("h"), al.geti("w"), al.geti("c"), al.geti("t")}),
                   al.geti("bias") ? std::optional<Tensor>(Tensor::zeros({al.geti("t")}))
                                   : std::nullopt);
      layer.impl = ConvLayer{std::move(k), parse_pad(al.get("pad")), al.geti("stride")};
    } else if (al.kind == "colora") {
      const int h = al.geti("h"), w = al.geti("w"), c = al.geti("c"), t = al.geti("t");
      CoLoRALayer l;
      l.base = ConvKernel(Tensor::zeros({h, w, c, t}),
                          al.geti("bias") ? std::optional<Tensor>(Tensor::zeros({t})) : std::nullopt);
      auto oit = flags.find(layer.name + "#order");
      if (oit == flags.end()) throw IoError("checkpoint: missing order flag for " + layer.name);
      l.order = oit->second ? ResidualOrder::kPwThenDw : ResidualOrder::kDwThenPw;
      auto mit = flags.find(layer.name + "#merges");
      l.merge_count = mit == flags.end() ? 0 : mit->second;
      l.kp = PointwiseKernel(Tensor::zeros({c, t}));
      l.kd = DepthwiseKernel(Tensor::zeros({h, w, l.order == ResidualOrder::kDwThenPw ? c : t}));
      if (al.geti("db")) l.db = Tensor::zeros({t});
      l.padding = parse_pad(al.get("pad"));
      l.stride = al.geti("stride");
      layer.impl = std::move(l);
    } else if (al.kind == "cnn_adapter") {
      const int h = al.geti("h"), w = al.geti("w"), c = al.geti("c"), t = al.geti("t");
      CnnAdapterLayer l;
      l.base = ConvKernel(Tensor::zeros({h, w, c, t}),
                          al.geti("bias") ? std::optional<Tensor>(Tensor::zeros({t})) : std::nullopt);
      l.a = PointwiseKernel(Tensor::zeros({t, al.geti("aout")}));
      l.norm_scale = Tensor::zeros({1});
      l.norm_shift = Tensor::zeros({1});
      l.padding = parse_pad(al.get("pad"));
      l.stride = al.geti("stride");
      layer.impl = std::move(l);
    } else if (al.kind == "relu") {
      layer.impl = ReluLayer{};
    } else if (al.kind == "maxpool") {
      layer.impl = MaxPoolLayer{};
    } else if (al.kind == "gap") {
      layer.impl = GlobalAvgPoolLayer{};
    } else if (al.kind == "flatten") {
      layer.impl = FlattenLayer{};
    } else if (al.kind == "dense") {
      layer.impl = DenseLayer{Tensor::zeros({al.geti("out"), al.geti("in")}),
                              Tensor::zeros({al.geti("out")})};
    } else if (al.kind == "dense_lora") {
      DenseLoraLayer l;
      l.w0 = Tensor::zeros({al.geti("k"), al.geti("d")});
      l.rank = al.geti("rank");
      l.a = Tensor::zeros({l.rank, al.geti("d")});
      l.b = Tensor::zeros({al.geti("k"), l.rank});
      layer.impl = std::move(l);
    } else {
      throw IoError("checkpoint arch: unknown layer kind " + al.kind);
    }
    g.add_layer(std::move(layer));
  }
  return g;
}

struct ParsedFile {
  std::map<std::string, Entry> entries;
  std::vector<std::string> entry_order;
  std::map<std::string, uint8_t> flags;
};

ParsedFile parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();

  Reader r{buf};
  if (r.bytes(4) != std::string(kMagic, 4)) throw IoError("checkpoint: magic mismatch");

  ParsedFile pf;
  const uint32_t count = r.u32();
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = r.u16();
    std::string name = r.bytes(name_len);
    Entry e;
    e.dtype = r.u8();
    const uint8_t ndim = r.u8();
    size_t n = 1;
    for (uint8_t d = 0; d < ndim; ++d) {
      const uint32_t dim = r.u32();
      if (dim == 0 || dim > (1u << 28)) throw IoError("checkpoint: bad dimension");
      e.dims.push_back(static_cast<int>(dim));
      n *= dim;
    }
    e.payload = r.bytes(n * dtype_size(e.dtype));
    if (pf.entries.count(name)) throw IoError("checkpoint: duplicate entry name " + name);
    pf.entry_order.push_back(name);
    pf.entries.emplace(std::move(name), std::move(e));
  }
  const uint32_t flag_count = r.u32();
  for (uint32_t i = 0; i < flag_count; ++i) {
    const uint16_t name_len = r.u16();
    std::string name = r.bytes(name_len);
    const uint8_t value = r.u8();
    if (pf.flags.count(name)) throw IoError("checkpoint: duplicate flag name " + name);
    pf.flags.emplace(std::move(name), value);
  }
  if (r.pos != buf.size()) throw IoError("checkpoint: trailing bytes");
  return pf;
}

Tensor tensor_from_entry(const std::string& name, const Entry& e) {
  if (e.dtype != kDtypeF32) throw IoError("checkpoint: entry " + name + " is not f32");
  std::vector<float> vals(e.payload.size() / 4);
  for (size_t i = 0; i < vals.size(); ++i) {
    uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<uint32_t>(static_cast<uint8_t>(e.payload[i * 4 + b])) << (8 * b);
    }
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    vals[i] = f;
  }
  return Tensor::from_data_unchecked(e.dims, std::move(vals));
}

void fill_params(ModelGraph& g, const ParsedFile& pf) {
  auto* mutable_g = &g;
  for (ParamRef& p : mutable_g->params()) {
    auto it = pf.entries.find(p.name);
    if (it == pf.entries.end()) throw IoError("checkpoint: missing tensor " + p.name);
    Tensor t = tensor_from_entry(p.name, it->second);
    if (t.shape() != p.tensor->shape()) {
      throw IoError("checkpoint: shape mismatch for " + p.name + ": file " + t.shape_str() +
                    " vs graph " + p.tensor->shape_str());
    }
    *p.tensor = std::move(t);
  }
  for (const auto& [name, value] : pf.flags) {
    if (name.find('#') != std::string::npos) continue;  // order/merge flags
    g.set_frozen(name, value != 0);
  }
}

}  // namespace

void save_checkpoint(const ModelGraph& g, const std::string& path) {
  auto* mutable_g = const_cast<ModelGraph*>(&g);
  std::vector<ParamRef> params = mutable_g->params();

  std::string body;
  const std::string arch = arch_text(g);
  uint32_t entry_count = 1 + static_cast<uint32_t>(params.size());
  append_entry(body, "__arch__", kDtypeU8, {static_cast<int>(arch.size())}, arch);
  for (const ParamRef& p : params) {
    append_entry(body, p.name, kDtypeF32, p.tensor->shape(), f32_payload(*p.tensor));
  }

  std::string flags;
  uint32_t flag_count = 0;
  auto put_flag = [&](const std::string& name, uint8_t value) {
    put_u16(flags, static_cast<uint16_t>(name.size()));
    flags += name;
    flags.push_back(static_cast<char>(value));
    ++flag_count;
  };
  for (const ParamRef& p : params) put_flag(p.name, p.trainable ? 0 : 1);
  for (const Layer& layer : g.layers()) {
    if (const auto* l = std::get_if<CoLoRALayer>(&layer.impl)) {
      put_flag(layer.name + "#order", l->order == ResidualOrder::kPwThenDw ? 1 : 0);
      if (l->merge_count > 255) {
        throw IoError("checkpoint: merge count " + std::to_string(l->merge_count) +
                      " exceeds flag range");
      }
      put_flag(layer.name + "#merges", static_cast<uint8_t>(l->merge_count));
    }
  }

  std::string out(kMagic, 4);
  put_u32(out, entry_count);
  out += body;
  put_u32(out, flag_count);
  out += flags;

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write checkpoint: " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("checkpoint write failed: " + path);
}

ModelGraph load_checkpoint(const std::string& path) {
  ParsedFile pf = parse_file(path);
  auto ait = pf.entries.find("__arch__");
  if (ait == pf.entries.end()) throw IoError("checkpoint: missing __arch__ entry");
  if (ait->second.dtype != kDtypeU8) throw IoError("checkpoint: __arch__ must be u8");
  Arch arch = parse_arch(ait->second.payload);
  ModelGraph g = graph_from_arch(arch, pf.flags);
  fill_params(g, pf);
  return g;
}

void load_checkpoint_into(const std::string& path, ModelGraph& g) {
  ParsedFile pf = parse_file(path);
  fill_params(g, pf);
  for (Layer& layer : g.layers()) {
    if (auto* l = std::get_if<CoLoRALayer>(&layer.impl)) {
      auto mit = pf.flags.find(layer.name + "#merges");
      if (mit != pf.flags.end()) l->merge_count = mit->second;
    }
  }
}

}  // namespace colora
