#include "ninr/trace.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ninr/error.hpp"

namespace ninr {

namespace {

using nlohmann::json;

json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);  // JSON has no inf/nan literals
}

double read_number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
  }
  throw FormatError("trace: expected a number");
}

json record_json(const EpochRecord& r) {
  json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = number(r.train_loss);
  j["test_loss"] = number(r.test_loss);
  j["train_acc"] = number(r.train_acc);
  j["test_acc"] = number(r.test_acc);
  j["niw_norms"] = json::array();
  for (double v : r.niw_norms) j["niw_norms"].push_back(number(v));
  j["weight_norms"] = json::array();
  for (double v : r.weight_norms) j["weight_norms"].push_back(number(v));
  return j;
}

EpochRecord record_from_json(const json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.train_loss = read_number(j.at("train_loss"));
  r.test_loss = read_number(j.at("test_loss"));
  r.train_acc = read_number(j.at("train_acc"));
  r.test_acc = read_number(j.at("test_acc"));
  for (const auto& v : j.at("niw_norms")) r.niw_norms.push_back(read_number(v));
  for (const auto& v : j.at("weight_norms")) r.weight_norms.push_back(read_number(v));
  return r;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw FormatError("write failed: " + path.string());
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw FormatError("format_double: conversion failed");
  return std::string(buf, end);
}

void TrainTrace::set_diagnostic(const std::string& key, double value) {
  for (auto& [k, v] : diagnostics) {
    if (k == key) {
      v = value;
      return;
    }
  }
  diagnostics.emplace_back(key, value);
}

double TrainTrace::total_wall_clock() const {
  return epochs.empty() ? 0.0 : epochs.back().wall_clock_s;
}

std::string TrainTrace::to_csv() const {
  const std::size_t n_niw = initial.niw_norms.size();
  const std::size_t n_w = initial.weight_norms.size();
  std::ostringstream os;
  os << "epoch,train_loss,test_loss,train_acc,test_acc";
  for (std::size_t a = 0; a < n_niw; ++a) os << ",niw_norm_" << a;
  for (std::size_t l = 0; l < n_w; ++l) os << ",w_norm_" << l;
  os << ",diverged\r\n";
  auto row = [&](const EpochRecord& r, bool div) {
    os << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.test_loss) << ','
       << format_double(r.train_acc) << ',' << format_double(r.test_acc);
    for (std::size_t a = 0; a < n_niw; ++a)
      os << ',' << (a < r.niw_norms.size() ? format_double(r.niw_norms[a]) : "");
    for (std::size_t l = 0; l < n_w; ++l)
      os << ',' << (l < r.weight_norms.size() ? format_double(r.weight_norms[l]) : "");
    os << ',' << (div ? 1 : 0) << "\r\n";
  };
  for (std::size_t i = 0; i < epochs.size(); ++i) row(epochs[i], diverged && i + 1 == epochs.size());
  return os.str();
}

std::string TrainTrace::to_json() const {
  json j;
  j["initial"] = record_json(initial);
  j["epochs"] = json::array();
  for (const auto& r : epochs) j["epochs"].push_back(record_json(r));
  j["diverged"] = diverged;
  j["stopped_early"] = stopped_early;
  json d = json::object();
  for (const auto& [k, v] : diagnostics) d[k] = number(v);
  j["diagnostics"] = d;
  return j.dump(1) + "\n";
}

TrainTrace TrainTrace::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("trace: ") + e.what());
  }
  try {
    TrainTrace t;
    t.initial = record_from_json(j.at("initial"));
    for (const auto& r : j.at("epochs")) t.epochs.push_back(record_from_json(r));
    t.diverged = j.at("diverged").get<bool>();
    t.stopped_early = j.value("stopped_early", false);
    if (j.contains("diagnostics")) {
      for (const auto& [k, v] : j["diagnostics"].items()) t.diagnostics.emplace_back(k, read_number(v));
    }
    return t;
  } catch (const json::exception& e) {
    throw FormatError(std::string("trace: ") + e.what());
  }
}

void TrainTrace::write_csv(const std::filesystem::path& path) const { write_text(path, to_csv()); }
void TrainTrace::write_json(const std::filesystem::path& path) const { write_text(path, to_json()); }

TrainTrace TrainTrace::read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open trace " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace ninr
