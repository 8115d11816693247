#include "denovo/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "denovo/errors.hpp"

namespace denovo {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

double Spectrum::precursor_neutral_mass() const { return neutral_mass_from_mz(precursor_mz, charge); }

void PreprocessConfig::validate() const {
  if (!(mz_min < mz_max)) throw ConfigError("preprocess: mz_min must be < mz_max");
  if (max_peaks < 1) throw ConfigError("preprocess: max_peaks must be >= 1");
  if (precursor_exclusion < 0) throw ConfigError("preprocess: precursor_exclusion must be >= 0");
}

std::vector<Spectrum> parse_mgf(std::istream& in, const Vocabulary& vocab) {
  std::vector<Spectrum> out;
  std::string raw;
  std::size_t line_no = 0;
  bool in_block = false;
  std::size_t block_start = 0;
  Spectrum cur;
  bool have_pepmass = false;
  bool have_charge = false;

  auto block_name = [&]() {
    return cur.title.empty() ? "block at line " + std::to_string(block_start) : "block '" + cur.title + "'";
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (!in_block) {
      if (line == "BEGIN IONS") {
        in_block = true;
        block_start = line_no;
        cur = Spectrum{};
        have_pepmass = have_charge = false;
        continue;
      }
      throw ParseError("content outside BEGIN IONS/END IONS", line_no);
    }

    if (line == "END IONS") {
      if (!have_pepmass) throw ParseError(block_name() + " lacks PEPMASS", line_no);
      if (!have_charge) throw ParseError(block_name() + " lacks CHARGE", line_no);
      out.push_back(std::move(cur));
      in_block = false;
      continue;
    }
    if (line == "BEGIN IONS") throw ParseError(block_name() + " is not terminated", line_no);

    const auto eq = line.find('=');
    if (eq != std::string_view::npos && line.front() >= 'A' && line.front() <= 'Z') {
      const std::string key(line.substr(0, eq));
      const std::string_view value = line.substr(eq + 1);
      if (key == "TITLE") {
        cur.title = std::string(value);
      } else if (key == "PEPMASS") {
        const auto sp = value.find_first_of(" \t");
        if (!parse_double(value.substr(0, sp), cur.precursor_mz)) {
          throw ParseError("malformed PEPMASS '" + std::string(value) + "'", line_no);
        }
        have_pepmass = true;
      } else if (key == "CHARGE") {
        std::string_view v = trim(value);
        if (!v.empty() && v.back() == '+') v.remove_suffix(1);
        int charge = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), charge);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size() || charge < 1) {
          throw ParseError("malformed CHARGE '" + std::string(value) + "'", line_no);
        }
        cur.charge = charge;
        have_charge = true;
      } else if (key == "SEQ") {
        try {
          cur.annotation = parse_sequence(vocab, trim(value));
        } catch (const ParseError& e) {
          throw ParseError(std::string("bad SEQ: ") + e.what(), line_no);
        }
      } else if (key == "RTINSECONDS") {
        double rt = 0;
        if (!parse_double(value, rt)) throw ParseError("malformed RTINSECONDS", line_no);
        cur.retention_time = rt;
      } else {
        cur.extra_headers.emplace_back(key, std::string(value));
      }
      continue;
    }

    const auto sp = line.find_first_of(" \t");
    if (sp == std::string_view::npos) throw ParseError("malformed peak line '" + std::string(line) + "'", line_no);
    Peak p;
    std::string_view rest = trim(line.substr(sp + 1));
    // Some writers append a charge column; only the first two fields are read.
    const auto sp2 = rest.find_first_of(" \t");
    if (sp2 != std::string_view::npos) rest = rest.substr(0, sp2);
    if (!parse_double(line.substr(0, sp), p.mz) || !parse_double(rest, p.intensity) || p.intensity < 0) {
      throw ParseError("malformed peak line '" + std::string(line) + "'", line_no);
    }
    cur.peaks.push_back(p);
  }
  if (in_block) throw ParseError(block_name() + " is not terminated", line_no);
  return out;
}

std::vector<Spectrum> read_mgf_file(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_mgf(in, vocab);
}

void write_mgf(std::ostream& out, const std::vector<Spectrum>& spectra, const Vocabulary& vocab) {
  for (const auto& s : spectra) {
    out << "BEGIN IONS\n";
    out << "TITLE=" << s.title << '\n';
    out << "PEPMASS=" << fixed6(s.precursor_mz) << '\n';
    out << "CHARGE=" << s.charge << "+\n";
    if (s.retention_time) out << "RTINSECONDS=" << fixed6(*s.retention_time) << '\n';
    if (s.annotation) out << "SEQ=" << render_sequence(vocab, *s.annotation) << '\n';
    for (const auto& [k, v] : s.extra_headers) out << k << '=' << v << '\n';
    for (const auto& p : s.peaks) out << fixed6(p.mz) << ' ' << fixed6(p.intensity) << '\n';
    out << "END IONS\n\n";
  }
  if (!out) throw IoError("write failed");
}

void write_mgf_file(const std::string& path, const std::vector<Spectrum>& spectra, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_mgf(out, spectra, vocab);
}

Spectrum preprocess(const Spectrum& spectrum, const PreprocessConfig& cfg) {
  if (spectrum.preprocessed) return spectrum;
  cfg.validate();
  Spectrum out = spectrum;
  out.peaks.clear();
  for (const auto& p : spectrum.peaks) {
    if (p.mz < cfg.mz_min || p.mz > cfg.mz_max) continue;
    if (std::abs(p.mz - spectrum.precursor_mz) <= cfg.precursor_exclusion) continue;
    out.peaks.push_back(p);
  }
  if (out.peaks.empty()) throw DomainError("empty spectrum '" + spectrum.title + "' after preprocessing");

  if (out.peaks.size() > static_cast<std::size_t>(cfg.max_peaks)) {
    // Ties on intensity resolve to the lower m/z so the kept set is deterministic.
    std::stable_sort(out.peaks.begin(), out.peaks.end(), [](const Peak& a, const Peak& b) {
      if (a.intensity != b.intensity) return a.intensity > b.intensity;
      return a.mz < b.mz;
    });
    out.peaks.resize(static_cast<std::size_t>(cfg.max_peaks));
  }

  double norm = 0.0;
  for (auto& p : out.peaks) {
    p.intensity = std::sqrt(p.intensity);
    norm += p.intensity * p.intensity;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (auto& p : out.peaks) p.intensity /= norm;
  }
  std::sort(out.peaks.begin(), out.peaks.end(),
            [](const Peak& a, const Peak& b) { return a.mz < b.mz || (a.mz == b.mz && a.intensity < b.intensity); });
  out.preprocessed = true;
  return out;
}

}  // namespace denovo
