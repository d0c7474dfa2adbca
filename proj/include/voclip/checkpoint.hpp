#pragma once

#include <cstdint>
#include <cstring>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "voclip/adam.hpp"
#include "voclip/autodiff.hpp"
#include "voclip/io.hpp"
#include "voclip/tensor.hpp"

// Checkpoint container: versioned header, then one record per tensor with
// (name, dtype, shape, raw little-endian data). Optimizer state rides along
// as records named opt.step / opt.m.<param> / opt.v.<param>.

namespace voclip {

namespace ckpt_detail {

inline constexpr char kMagic[8] = {'V', 'O', 'C', 'L', 'I', 'P', 'T', '1'};

template <typename T>
constexpr std::uint8_t dtype_code() {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8, "unsupported dtype");
  return sizeof(T) == 4 ? 1 : 2;
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  const std::string& origin;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error(origin + ": truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 8;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

struct Record {
  std::uint8_t dtype = 0;
  Shape shape;
  std::string raw;
};

template <typename T>
void append_record(std::string& out, const std::string& name, const Tensor<T>& t) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  out.push_back(static_cast<char>(dtype_code<T>()));
  put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) put_u64(out, static_cast<std::uint64_t>(d));
  const std::size_t nbytes = t.data.size() * sizeof(T);
  const std::size_t off = out.size();
  out.resize(off + nbytes);
  std::memcpy(out.data() + off, t.data.data(), nbytes);
}

inline std::map<std::string, Record> parse_records(const std::string& buf, const std::string& origin) {
  Reader rd{buf, 0, origin};
  const std::string magic = rd.bytes(8);
  if (std::memcmp(magic.data(), kMagic, 8) != 0) throw std::runtime_error(origin + ": not a checkpoint file");
  const std::uint64_t n = rd.u64();
  std::map<std::string, Record> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint32_t name_len = rd.u32();
    const std::string name = rd.bytes(name_len);
    Record rec;
    rec.dtype = static_cast<std::uint8_t>(rd.bytes(1)[0]);
    if (rec.dtype != 1 && rec.dtype != 2) throw std::runtime_error(origin + ": bad dtype code in record '" + name + "'");
    const std::uint32_t ndim = rd.u32();
    std::int64_t numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      rec.shape.push_back(static_cast<std::int64_t>(rd.u64()));
      numel *= rec.shape.back();
    }
    const std::size_t elem = rec.dtype == 1 ? 4 : 8;
    rec.raw = rd.bytes(static_cast<std::size_t>(numel) * elem);
    if (!out.emplace(name, std::move(rec)).second) {
      throw std::runtime_error(origin + ": duplicate record '" + name + "'");
    }
  }
  return out;
}

template <typename T>
void fill_tensor(Tensor<T>& t, const Record& rec, const std::string& name, const std::string& origin) {
  if (rec.dtype != dtype_code<T>()) throw std::runtime_error(origin + ": dtype mismatch for '" + name + "'");
  if (rec.shape != t.shape) {
    throw std::runtime_error(origin + ": shape mismatch for '" + name + "': file has " + shape_str(rec.shape) + ", expected " + shape_str(t.shape));
  }
  std::memcpy(t.data.data(), rec.raw.data(), rec.raw.size());
}

}  // namespace ckpt_detail

template <typename T>
void save_checkpoint(const std::string& path, const std::vector<Parameter<T>*>& params, const AdamState<T>* opt) {
  using namespace ckpt_detail;
  std::string out(kMagic, 8);
  std::uint64_t n = params.size();
  if (opt != nullptr) n += 1 + 2 * params.size();
  put_u64(out, n);
  for (const auto* p : params) append_record(out, p->name, p->value);
  if (opt != nullptr) {
    if (opt->m.size() != params.size()) throw std::invalid_argument("save_checkpoint: optimizer state does not match parameters");
    Tensor<T> step_t = Tensor<T>::scalar(static_cast<T>(opt->step));
    append_record(out, "opt.step", step_t);
    for (std::size_t i = 0; i < params.size(); ++i) append_record(out, "opt.m." + params[i]->name, opt->m[i]);
    for (std::size_t i = 0; i < params.size(); ++i) append_record(out, "opt.v." + params[i]->name, opt->v[i]);
  }
  atomic_write(path, out);
}

template <typename T>
void load_checkpoint(const std::string& path, const std::vector<Parameter<T>*>& params, AdamState<T>* opt) {
  using namespace ckpt_detail;
  const std::string buf = read_text_file(path);
  const auto records = parse_records(buf, path);
  for (auto* p : params) {
    auto it = records.find(p->name);
    if (it == records.end()) throw std::runtime_error(path + ": missing parameter '" + p->name + "'");
    fill_tensor(p->value, it->second, p->name, path);
  }
  if (opt != nullptr) {
    auto st = records.find("opt.step");
    if (st == records.end()) throw std::runtime_error(path + ": checkpoint has no optimizer state");
    Tensor<T> step_t = Tensor<T>::scalar(T(0));
    fill_tensor(step_t, st->second, "opt.step", path);
    opt->step = static_cast<std::int64_t>(step_t.data[0]);
    opt->m.clear();
    opt->v.clear();
    for (auto* p : params) {
      auto im = records.find("opt.m." + p->name);
      auto iv = records.find("opt.v." + p->name);
      if (im == records.end() || iv == records.end()) {
        throw std::runtime_error(path + ": missing optimizer state for '" + p->name + "'");
      }
      Tensor<T> m(p->value.shape), v(p->value.shape);
      fill_tensor(m, im->second, "opt.m." + p->name, path);
      fill_tensor(v, iv->second, "opt.v." + p->name, path);
      opt->m.push_back(std::move(m));
      opt->v.push_back(std::move(v));
    }
  }
}

}  // namespace voclip
