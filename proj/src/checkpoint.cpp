#include "denovo/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "denovo/errors.hpp"

namespace denovo {

void save_parameters(std::ostream& out, const nn::ParameterStore& store) {
  out << "params " << store.entries().size() << '\n';
  char buf[48];
  for (const auto& [name, t] : store.entries()) {
    out << "param " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    const auto d = t.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%a", d[i]);
      if (i) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing parameters");
}

void load_parameters(std::istream& in, nn::ParameterStore& store) {
  std::string word;
  std::size_t count = 0;
  if (!(in >> word >> count) || word != "params") throw ParseError("expected 'params <count>'", 0);
  if (count != store.entries().size()) {
    throw DimensionError("checkpoint has " + std::to_string(count) + " parameters, model expects " +
                         std::to_string(store.entries().size()));
  }
  std::map<std::string, ad::Tensor*> by_name;
  for (auto& [name, t] : store.entries()) by_name[name] = &t;
  for (std::size_t p = 0; p < count; ++p) {
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(in >> word >> name >> rows >> cols) || word != "param") throw ParseError("malformed parameter header", p + 1);
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw DimensionError("checkpoint parameter '" + name + "' unknown to model");
    ad::Tensor& t = *it->second;
    if (t.rows() != rows || t.cols() != cols) {
      throw DimensionError("parameter '" + name + "' shape mismatch: checkpoint [" + std::to_string(rows) + "," +
                           std::to_string(cols) + "] vs model " + t.shape_str());
    }
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!(in >> word)) throw ParseError("truncated values for '" + name + "'", p + 1);
      char* end = nullptr;
      data[i] = std::strtod(word.c_str(), &end);
      if (end != word.c_str() + word.size()) throw ParseError("bad value '" + word + "' in '" + name + "'", p + 1);
    }
  }
}

}  // namespace denovo
