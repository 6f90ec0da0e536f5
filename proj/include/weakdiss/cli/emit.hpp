#pragma once

// Deterministic text output: 17 significant digits, dot decimal separator,
// write-temp-then-rename file replacement.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "json.hpp"

#include "weakdiss/weak_value.hpp"

namespace weakdiss::cli {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

inline void dump_json_into(const nlohmann::json& j, std::ostringstream& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out << ",\n";
        first = false;
        out << inner << nlohmann::json(k).dump() << ": ";
        dump_json_into(v, out, indent + 1);
      }
      out << "\n" << pad << "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out << ",\n";
        out << inner;
        dump_json_into(j[i], out, indent + 1);
      }
      out << "\n" << pad << "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      out << (std::isfinite(v) ? format_double(v) : "null");
      return;
    }
    default:
      out << j.dump();
  }
}

}  // namespace detail

/// Pretty JSON with floats at 17 significant digits; non-finite floats become null.
inline std::string dump_json(const nlohmann::json& j) {
  std::ostringstream out;
  detail::dump_json_into(j, out, 0);
  out << "\n";
  return out.str();
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

inline constexpr const char* kTraceCsvHeader = "gamma_tau,re_wv,im_wv,postselect_prob";

/// `abscissa` is the dimensionless rate * tau column.
inline std::string trace_csv(const WeakValueTrace& tr, const std::vector<double>& abscissa) {
  std::string s = std::string(kTraceCsvHeader) + "\n";
  for (std::size_t k = 0; k < tr.size(); ++k) {
    s += format_double(abscissa[k]) + "," + format_double(tr.values[k].real()) + "," +
         format_double(tr.values[k].imag()) + "," + format_double(tr.postselection_probs[k]) + "\n";
  }
  return s;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, 16);
  return std::string(buf, res.ptr);
}

inline nlohmann::json trace_json(const WeakValueTrace& tr, const std::vector<double>& abscissa) {
  nlohmann::json j;
  j["gamma_tau"] = abscissa;
  std::vector<double> re, im;
  for (const auto& v : tr.values) {
    re.push_back(v.real());
    im.push_back(v.imag());
  }
  j["re_wv"] = re;
  j["im_wv"] = im;
  j["postselect_prob"] = tr.postselection_probs;
  std::vector<bool> gaps;
  for (auto g : tr.gaps) gaps.push_back(g != 0);
  j["gap"] = gaps;
  j["setup_hash"] = hex64(tr.setup_hash);
  j["channel"] = tr.channel_description;
  return j;
}

}  // namespace weakdiss::cli
