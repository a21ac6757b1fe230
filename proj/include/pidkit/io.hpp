// JSON device files and CSV tables.
//
// Every file is an object with "kind", "layout" ("row-major") and
// "metadata" {seed, description}. Complex matrices are arrays of rows, each
// row an array of [re, im] pairs.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pidkit/games.hpp"
#include "pidkit/simulation.hpp"

namespace pidkit {

struct FormatError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Metadata {
  std::optional<std::uint64_t> seed;
  std::string description;
};

// Linear functional on a device with the given shape: targets[x0][x1] on A0 (x) A1.
struct Functional {
  int din = 0, dout = 0;
  std::vector<std::vector<CMatrix>> targets;
};

// Output of `roi --certificate`: the value and the dual witness.
struct CertificateFile {
  int din = 0, dout = 0;
  double r = 0;     // primal
  double dual = 0;  // dual
  double gap = 0;
  DualWitness witness;
};

using DeviceValue = std::variant<Pid, Pmd, Povm, Instrument, ChoiMatrix, GameSpec, PiGameSpec,
                                 FreeSimulation, Functional, CertificateFile>;

struct DeviceFile {
  DeviceValue value;
  Metadata meta;

  std::string kind() const;
};

// Throws FormatError on malformed input, missing fields or shape mismatches.
DeviceFile parse_device(const std::string& text);
std::string serialize_device(const DeviceFile& f);

DeviceFile load_device(const std::string& path);
void save_device(const std::string& path, const DeviceFile& f);

template <class T>
const T& expect_kind(const DeviceFile& f, const char* what) {
  if (const T* v = std::get_if<T>(&f.value)) return *v;
  throw FormatError(std::string("expected a ") + what + " file, got kind '" + f.kind() + "'");
}

// %.17g
std::string format_double(double x);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::string str() const;
};

CsvTable bound_table(const BoundReport& r);

}  // namespace pidkit
