#include <cmath>
#include <sstream>

#include "denovo/errors.hpp"
#include "denovo/spectrum.hpp"
#include "denovo/synthgen.hpp"
#include "doctest.h"

using namespace denovo;

namespace {

const char* kBlock =
    "BEGIN IONS\n"
    "TITLE=spec1\n"
    "PEPMASS=74.0418\n"
    "CHARGE=2+\n"
    "SEQ=GA\n"
    "RTINSECONDS=12.5\n"
    "SCANS=7\n"
    "58.0287 10.0\n"
    "90.0550 20.0\n"
    "END IONS\n";

std::vector<Spectrum> parse(const std::string& text, const Vocabulary& v = Vocabulary::toy()) {
  std::istringstream in(text);
  return parse_mgf(in, v);
}

}  // namespace

TEST_CASE("parse a basic block") {
  const auto v = Vocabulary::toy();
  const auto s = parse(kBlock);
  REQUIRE(s.size() == 1);
  CHECK(s[0].title == "spec1");
  CHECK(s[0].precursor_mz == 74.0418);
  CHECK(s[0].charge == 2);
  REQUIRE(s[0].annotation);
  CHECK(*s[0].annotation == parse_sequence(v, "GA"));
  CHECK(s[0].peaks.size() == 2);
  CHECK(s[0].retention_time == 12.5);
  REQUIRE(s[0].extra_headers.size() == 1);
  CHECK(s[0].extra_headers[0].first == "SCANS");
}

TEST_CASE("charge with and without sign") {
  std::string plain = kBlock;
  plain.replace(plain.find("CHARGE=2+"), 9, "CHARGE=2");
  CHECK(parse(plain)[0].charge == 2);
  CHECK(parse(kBlock)[0].charge == 2);
}

TEST_CASE("parse errors") {
  std::string no_pepmass = kBlock;
  no_pepmass.erase(no_pepmass.find("PEPMASS"), std::string("PEPMASS=74.0418\n").size());
  CHECK_THROWS_AS(parse(no_pepmass), ParseError);
  std::string no_charge = kBlock;
  no_charge.erase(no_charge.find("CHARGE"), std::string("CHARGE=2+\n").size());
  CHECK_THROWS_AS(parse(no_charge), ParseError);
  std::string bad_peak = kBlock;
  bad_peak.replace(bad_peak.find("58.0287 10.0"), 12, "58.0287 abc");
  try {
    parse(bad_peak);
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 8);
  }
  std::string unterminated = kBlock;
  unterminated.erase(unterminated.find("END IONS"));
  CHECK_THROWS_AS(parse(unterminated), ParseError);
}

TEST_CASE("write and re-parse") {
  const auto v = Vocabulary::toy();
  std::ostringstream empty;
  write_mgf(empty, {}, v);
  CHECK(empty.str().empty());

  auto spectra = parse(kBlock);
  spectra[0].annotation.reset();
  std::ostringstream out;
  write_mgf(out, spectra, v);
  CHECK(out.str().find("SEQ=") == std::string::npos);
  CHECK(parse(out.str()) == spectra);

  SynthConfig cfg;
  cfg.noise_peaks = 3;
  cfg.mz_jitter = 0.01;
  const auto corpus = generate_corpus(cfg, 50);
  std::ostringstream first;
  write_mgf(first, corpus, v);
  const auto once = parse(first.str());
  std::ostringstream second;
  write_mgf(second, once, v);
  CHECK(parse(second.str()) == once);
  CHECK(second.str() == first.str());
}

TEST_CASE("preprocess keeps the largest peaks and normalizes") {
  Spectrum s;
  s.title = "p";
  s.precursor_mz = 3000.0;
  s.charge = 1;
  for (int i = 0; i < 200; ++i) s.peaks.push_back({100.0 + i, static_cast<double>((i * 37) % 200 + 1)});
  PreprocessConfig cfg;
  const auto p = preprocess(s, cfg);
  REQUIRE(p.peaks.size() == 150);
  double norm = 0.0;
  for (const auto& pk : p.peaks) norm += pk.intensity * pk.intensity;
  CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-9);
  for (std::size_t i = 1; i < p.peaks.size(); ++i) CHECK(p.peaks[i - 1].mz < p.peaks[i].mz);
  // Raw intensities were a permutation of 1..200; the kept ones are 51..200.
  double smallest_sqrt = 1e9;
  for (const auto& pk : p.peaks) smallest_sqrt = std::min(smallest_sqrt, pk.intensity);
  double total = 0.0;
  for (int k = 51; k <= 200; ++k) total += k;
  CHECK(smallest_sqrt == doctest::Approx(std::sqrt(51.0) / std::sqrt(total)).epsilon(1e-12));
  CHECK(preprocess(p, cfg) == p);
}

TEST_CASE("preprocess windows") {
  Spectrum s;
  s.title = "w";
  s.precursor_mz = 500.0;
  s.charge = 2;
  s.peaks = {{10.0, 1.0}, {499.0, 5.0}, {501.5, 5.0}, {600.0, 2.0}, {3000.0, 1.0}};
  const auto p = preprocess(s, PreprocessConfig{});
  REQUIRE(p.peaks.size() == 1);
  CHECK(p.peaks[0].mz == 600.0);

  Spectrum only;
  only.title = "only-precursor";
  only.precursor_mz = 500.0;
  only.peaks = {{500.0, 1.0}};
  CHECK_THROWS_AS(preprocess(only, PreprocessConfig{}), DomainError);
  PreprocessConfig bad;
  bad.mz_min = 3000.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
